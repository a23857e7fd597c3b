#include "walkprior/terrain/curriculum.hpp"

#include <algorithm>

namespace wp::terrain {

int curriculum_update(CurriculumState& state, const EpisodeOutcome& outcome,
                      const CurriculumConfig& cfg, Rng& rng) {
  state.distance = outcome.distance_traveled;
  state.commanded = outcome.commanded_distance;
  if (outcome.commanded_distance >= cfg.min_commanded_distance) {
    const double ratio = outcome.distance_traveled / outcome.commanded_distance;
    if (ratio >= cfg.promote_ratio) {
      if (state.level >= cfg.max_level) {
        state.level = uniform_int(rng, 0, cfg.max_level);
      } else {
        ++state.level;
      }
    } else if (ratio < cfg.demote_ratio) {
      --state.level;
    }
  }
  state.level = std::clamp(state.level, 0, cfg.max_level);
  return state.level;
}

}  // namespace wp::terrain
