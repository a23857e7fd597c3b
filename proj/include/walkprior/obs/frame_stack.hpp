#pragma once

#include <cstddef>
#include <vector>

#include "walkprior/common.hpp"

namespace wp::obs {

// Fixed-depth ring of equal-length frames; stacked() is oldest first.
class FrameHistory {
 public:
  FrameHistory(int depth, int dim);
  void reset(const Vec& frame);  // fills every slot with frame
  void push(const Vec& frame);
  Vec stacked() const;
  Vec stacked_last(int count) const;
  void stacked_into(double* out) const;
  int depth() const { return depth_; }
  int dim() const { return dim_; }

 private:
  void check(const Vec& frame) const;
  int depth_;
  int dim_;
  std::vector<double> data_;
  int head_ = 0;  // slot of the oldest frame
};

struct StackConfig {
  int proprio_frames = 15;
  int privileged_frames = 3;
  int state_frames = 10;
};

// Per-environment histories: noisy proprio for the actor, privileged frames
// and noise-free state frames for the critic and discriminator.
class FrameStack {
 public:
  FrameStack(const StackConfig& cfg, int proprio_dim, int privileged_dim);
  void reset(const Vec& noisy_proprio, const Vec& privileged, const Vec& state);
  void push(const Vec& noisy_proprio, const Vec& privileged, const Vec& state);
  Vec proprio() const { return proprio_.stacked(); }
  // Noise-free proprio frames, taken from the head of each state frame.
  Vec clean_proprio() const { return clean_proprio_.stacked(); }
  Vec privileged() const { return privileged_.stacked(); }
  Vec critic_state() const { return state_.stacked_last(cfg_.privileged_frames); }
  Vec disc_state() const { return state_.stacked_last(cfg_.state_frames); }
  const StackConfig& config() const { return cfg_; }

 private:
  StackConfig cfg_;
  FrameHistory proprio_;
  FrameHistory clean_proprio_;
  FrameHistory privileged_;
  FrameHistory state_;
};

}  // namespace wp::obs
