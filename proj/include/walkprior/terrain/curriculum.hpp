#pragma once

#include "walkprior/common.hpp"
#include "walkprior/terrain/heightfield.hpp"

namespace wp::terrain {

struct CurriculumConfig {
  double promote_ratio = 0.8;  // traveled / commanded at or above this promotes
  double demote_ratio = 0.4;   // below this demotes
  int max_level = 20;
  // Episodes with less commanded travel than this leave the level unchanged.
  double min_commanded_distance = 0.5;
};

struct CurriculumState {
  TerrainFamily family = TerrainFamily::SlopeUp;
  int level = 0;
  int instance = 0;
  double distance = 0.0;   // m traveled this episode
  double commanded = 0.0;  // m commanded this episode
};

struct EpisodeOutcome {
  double distance_traveled = 0.0;
  double commanded_distance = 0.0;
};

// Applies the promotion/demotion rule at episode end and returns the new level.
// Promotion past the top level reassigns a uniformly random level.
int curriculum_update(CurriculumState& state, const EpisodeOutcome& outcome,
                      const CurriculumConfig& cfg, Rng& rng);

}  // namespace wp::terrain
