#include <cmath>
#include <numbers>

#include <json.hpp>

#include "doctest.h"
#include "walkprior/obs/frame_stack.hpp"
#include "walkprior/obs/gait.hpp"
#include "walkprior/obs/observation.hpp"

using namespace wp;
using namespace wp::obs;

namespace {

sim::WalkerSim make_sim() {
  auto field = std::make_shared<const terrain::Heightfield>(
      terrain::generate_terrain(terrain::TerrainFamily::SlopeUp, 0, 0));
  return sim::WalkerSim(sim::WalkerModel{}, sim::EnvParams{}, field);
}

Vec iota(int n, double start) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = start + i;
  return v;
}

}  // namespace

TEST_CASE("gait clock at the phase origin and after one cycle") {
  GaitSchedule s;
  GaitClock a = gait_clock(0.0, s);
  CHECK(a.sin == 0.0);
  CHECK(a.cos == 1.0);
  CHECK(a.mask == std::array<int, 2>{1, 1});
  GaitClock b = gait_clock(s.cycle, s);
  CHECK(b.sin == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.cos == doctest::Approx(1.0));
  CHECK(b.mask == a.mask);
}

TEST_CASE("gait clock scales time by the cycle") {
  GaitSchedule s;
  GaitClock g = gait_clock(s.cycle / 4.0, s);
  CHECK(g.sin == doctest::Approx(1.0));
  CHECK(std::abs(g.cos) < 1e-12);
}

TEST_CASE("gait mask windows") {
  GaitSchedule s;
  // DS [0, 0.05), SS left stance [0.05, 0.5), DS [0.5, 0.55), SS right stance.
  const double mid_ss1 = (0.05 + 0.5) / 2.0 * s.cycle;
  CHECK(gait_clock(mid_ss1, s).mask == std::array<int, 2>{1, 0});
  CHECK(gait_clock(0.525 * s.cycle, s).mask == std::array<int, 2>{1, 1});
  CHECK(gait_clock(0.8 * s.cycle, s).mask == std::array<int, 2>{0, 1});
  CHECK(gait_clock(0.02 * s.cycle, s).mask == std::array<int, 2>{1, 1});
}

TEST_CASE("gait mask values and duty cycle over one cycle") {
  GaitSchedule s;
  const double dt = 0.01;
  const int steps = static_cast<int>(std::lround(s.cycle / dt));
  int ds = 0;
  for (int k = 0; k < steps; ++k) {
    GaitClock g = gait_clock(k * dt, s);
    const bool valid = g.mask == std::array<int, 2>{1, 1} || g.mask == std::array<int, 2>{1, 0} ||
                       g.mask == std::array<int, 2>{0, 1};
    CHECK(valid);
    if (g.mask[0] && g.mask[1]) ++ds;
  }
  CHECK(std::abs(static_cast<double>(ds) / steps - s.ds_fraction) <= 1.0 / steps + 1e-12);
}

TEST_CASE("swing phase runs from 0 to 1 across a swing window") {
  GaitSchedule s;
  GaitClock start = gait_clock(0.05 * s.cycle + 1e-9, s);
  CHECK(start.swing_phase[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(start.swing_phase[0] == -1.0);
  GaitClock mid = gait_clock(0.275 * s.cycle, s);
  CHECK(mid.swing_phase[1] == doctest::Approx(0.5));
}

TEST_CASE("gait clock rejects negative time") {
  CHECK_THROWS_AS(gait_clock(-0.1, GaitSchedule{}), Error);
}

TEST_CASE("layout dimensions") {
  ObsLayout desk = make_layout(desk_dims());
  CHECK(desk.proprio_dim == 2 + 3 + 6 + 6 + 6 + 3 + 3);
  CHECK(desk.proprio_dim == 29);
  CHECK(desk.privileged_dim == 6 + 3 + 1 + 2 + 2 + 1 + 2 + 1 + 55);
  CHECK(desk.aux_dim == 30);
  ObsLayout full = make_layout(full_dims());
  CHECK(full.proprio_dim == 47);
  CHECK(full.privileged_dim == 213);
  CHECK(full.aux_dim == 48);
}

TEST_CASE("layout blocks are contiguous and follow row order") {
  ObsLayout l = make_layout(desk_dims());
  for (const auto* group : {&l.proprio, &l.privileged, &l.aux}) {
    int o = 0;
    for (const Block& b : *group) {
      CHECK(b.offset == o);
      o += b.width;
    }
  }
  CHECK(l.proprio.front().name == "clock");
  CHECK(l.proprio.back().name == "euler");
  CHECK(l.privileged.back().name == "height_map");
  CHECK_THROWS_AS(l.find("proprio", "height_map"), Error);
  CHECK_THROWS_AS(l.find("nope", "clock"), Error);
}

TEST_CASE("aux rows are exactly the selected observation rows") {
  ObsLayout l = make_layout(desk_dims());
  std::vector<std::string> names;
  for (const Block& b : l.aux) names.push_back(b.name);
  CHECK(names == std::vector<std::string>{"joint_pos", "joint_vel", "base_ang_vel", "euler",
                                          "action_diff", "base_lin_vel", "friction",
                                          "contact_phase"});
}

TEST_CASE("layout manifest") {
  ObsLayout l = make_layout(desk_dims());
  auto j = nlohmann::json::parse(layout_manifest_json(l));
  CHECK(j["proprio_dim"] == 29);
  CHECK(j["privileged_dim"] == 73);
  CHECK(j["blocks"].size() == l.proprio.size() + l.privileged.size() + l.aux.size());
  const auto& b = j["blocks"][3];
  CHECK(b["name"] == "joint_pos");
  CHECK(b["offset"] == 11);
  CHECK(b["width"] == 6);
  CHECK(b["noise"].get<double>() == 0.01);
}

TEST_CASE("assemble_frame fills blocks from the sim") {
  auto sim = make_sim();
  Rng rng(3);
  sim.reset(2.0, rng);
  sim.step(sim.model().nominal, rng);
  ObsLayout l = make_layout(desk_dims());
  FrameInputs in;
  in.command = {0.5, 0.0, 0.1};
  in.action = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  in.prev_action = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  in.last_action = in.prev_action;
  ObservationFrame f = assemble_frame(sim, l, in, GaitSchedule{}, terrain::ScanGrid{});
  CHECK(f.proprio.size() == 29);
  CHECK(f.privileged.size() == 73);
  CHECK(f.aux.size() == 30);
  CHECK(f.proprio[0] == 0.0);
  CHECK(f.proprio[1] == 1.0);
  CHECK(f.proprio[2] == 0.5);
  CHECK(f.proprio[4] == 0.1);
  const Block& ad = l.find("privileged", "action_diff");
  CHECK(f.privileged[ad.offset + 5] == doctest::Approx(0.5));
  CHECK(f.privileged[l.find("privileged", "friction").offset] == sim.params().friction);
  CHECK(f.privileged[l.find("privileged", "body_weight").offset] == sim.total_mass());
  const Block& gp = l.find("privileged", "gait_phase");
  CHECK(f.privileged[gp.offset] == 1.0);
  CHECK(f.privileged[gp.offset + 1] == 1.0);
  const Block& cp = l.find("aux", "contact_phase");
  CHECK(f.aux[cp.offset] == 1.0);
  CHECK(f.aux[cp.offset + 1] == 1.0);
  const Block& hm = l.find("privileged", "height_map");
  CHECK(f.privileged[hm.offset + 27] == doctest::Approx(sim.state().q[1]).epsilon(0.02));
  const Block& jp = l.find("proprio", "joint_pos");
  for (int i = 0; i < 6; ++i) CHECK(std::abs(f.proprio[jp.offset + i]) < 1e-2);
  CHECK(f.state().size() == 102);
}

TEST_CASE("assemble_frame rejects mismatched layouts") {
  auto sim = make_sim();
  Rng rng(1);
  sim.reset(2.0, rng);
  CHECK_THROWS_AS(assemble_frame(sim, make_layout(full_dims()), {}, {}, terrain::ScanGrid{}),
                  Error);
  CHECK_THROWS_AS(assemble_frame(sim, make_layout(desk_dims()), {}, {}, terrain::ScanGrid{17, 11}),
                  Error);
}

TEST_CASE("proprio reads delayed sensors, aux reads the true state") {
  auto sim = make_sim();
  Rng rng(5);
  sim::EnvParams p;
  p.obs_motor_lag = 8;
  sim.set_params(p);
  sim.reset(2.0, rng);
  sim::JointVec target = sim.model().nominal;
  target[0] += 0.4;
  for (int k = 0; k < 5; ++k) sim.step(target, rng);
  ObsLayout l = make_layout(desk_dims());
  ObservationFrame f = assemble_frame(sim, l, {}, GaitSchedule{}, terrain::ScanGrid{});
  const double lagged = f.proprio[l.find("proprio", "joint_pos").offset];
  const double truth = f.aux[l.find("aux", "joint_pos").offset];
  CHECK(lagged == doctest::Approx(sim.sensor(8).q[0] - sim.model().nominal[0]));
  CHECK(truth == doctest::Approx(sim.joint_q()[0] - sim.model().nominal[0]));
  CHECK(lagged != truth);
}

TEST_CASE("zero noise scales give the identity") {
  ObsLayout l = make_layout(desk_dims(), NoiseScales{0.0, 0.0, 0.0, 0.0, 0.0});
  Rng rng(9);
  Vec v = iota(29, 0.5);
  CHECK(add_proprio_noise(v, l, rng) == v);
}

TEST_CASE("clock and command are never perturbed") {
  NoiseScales n{1.0, 1.0, 1.0, 1.0, 1.0};
  ObsLayout l = make_layout(desk_dims(), n);
  l.proprio[0].noise = 1.0;
  l.proprio[1].noise = 1.0;
  Rng rng(2);
  Vec v = iota(29, 0.0);
  Vec out = add_proprio_noise(v, l, rng);
  for (int i = 0; i < 5; ++i) CHECK(out[i] == v[i]);
  int changed = 0;
  for (int i = 5; i < 29; ++i) changed += out[i] != v[i];
  CHECK(changed == 24);
}

TEST_CASE("noise standard deviation audit") {
  NoiseScales n;
  n.joint_pos = 0.1;
  ObsLayout l = make_layout(desk_dims(), n);
  const Block& b = l.find("proprio", "joint_pos");
  Rng rng(1234);
  Vec zero(29, 0.0);
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < draws / b.width + 1; ++k) {
    Vec out = add_proprio_noise(zero, l, rng);
    for (int i = 0; i < b.width; ++i) {
      sum += out[b.offset + i];
      sq += out[b.offset + i] * out[b.offset + i];
    }
  }
  const double n_total = (draws / b.width + 1) * b.width;
  const double mean = sum / n_total;
  const double sd = std::sqrt(sq / n_total - mean * mean);
  CHECK(std::abs(sd - 0.1) < 0.002);
}

TEST_CASE("privileged vector untouched by noise") {
  auto sim = make_sim();
  Rng rng(4);
  sim.reset(1.5, rng);
  ObsLayout l = make_layout(desk_dims());
  ObservationFrame f = assemble_frame(sim, l, {}, GaitSchedule{}, terrain::ScanGrid{});
  const Vec before = f.privileged;
  const Vec aux_before = f.aux;
  Vec noisy = add_proprio_noise(f.proprio, l, rng);
  CHECK(noisy != f.proprio);
  CHECK(f.privileged == before);
  CHECK(f.aux == aux_before);
}

TEST_CASE("frame history reset and eviction") {
  FrameHistory h(15, 2);
  h.reset({1.0, 2.0});
  Vec s = h.stacked();
  REQUIRE(s.size() == 30);
  for (int k = 0; k < 15; ++k) {
    CHECK(s[2 * k] == 1.0);
    CHECK(s[2 * k + 1] == 2.0);
  }
  for (int k = 1; k <= 16; ++k) h.push({10.0 * k, 0.0});
  s = h.stacked();
  // 16 pushes evicted the reset frame and the first pushed frame.
  CHECK(s.front() == 20.0);
  CHECK(s[28] == 160.0);
  Vec last3 = h.stacked_last(3);
  CHECK(last3 == Vec{140.0, 0.0, 150.0, 0.0, 160.0, 0.0});
  Vec buf(30);
  h.stacked_into(buf.data());
  CHECK(buf == s);
  CHECK_THROWS_AS(h.push({1.0}), Error);
  CHECK_THROWS_AS(h.stacked_last(16), Error);
}

TEST_CASE("frame stack lengths") {
  StackConfig cfg;
  FrameStack st(cfg, 29, 73);
  Vec p(29, 1.0), v(73, 2.0), s(102, 3.0);
  st.reset(p, v, s);
  CHECK(st.proprio().size() == 15 * 29);
  CHECK(st.privileged().size() == 3 * 73);
  CHECK(st.critic_state().size() == 3 * (29 + 73));
  CHECK(st.disc_state().size() == 10 * 102);
}

TEST_CASE("stacked outputs are a pure function of the last frames") {
  StackConfig cfg;
  FrameStack a(cfg, 2, 1), b(cfg, 2, 1);
  Rng rng(8);
  a.reset({9, 9}, {9}, {9, 9, 9});
  b.reset({-1, -1}, {-1}, {-1, -1, -1});
  for (int k = 0; k < 20; ++k) {
    Vec p{uniform(rng, 0, 1), uniform(rng, 0, 1)}, v{uniform(rng, 0, 1)};
    Vec s{p[0], p[1], v[0]};
    a.push(p, v, s);
    b.push(p, v, s);
  }
  CHECK(a.proprio() == b.proprio());
  CHECK(a.privileged() == b.privileged());
  CHECK(a.disc_state() == b.disc_state());
}
