#include "walkprior/obs/frame_stack.hpp"

#include <algorithm>

namespace wp::obs {

FrameHistory::FrameHistory(int depth, int dim) : depth_(depth), dim_(dim) {
  if (depth < 1 || dim < 0) throw Error("FrameHistory: depth must be >= 1");
  data_.assign(static_cast<std::size_t>(depth) * dim, 0.0);
}

void FrameHistory::check(const Vec& frame) const {
  if (static_cast<int>(frame.size()) != dim_) throw Error("FrameHistory: frame size mismatch");
}

void FrameHistory::reset(const Vec& frame) {
  check(frame);
  for (int s = 0; s < depth_; ++s) std::copy(frame.begin(), frame.end(), data_.begin() + s * dim_);
  head_ = 0;
}

void FrameHistory::push(const Vec& frame) {
  check(frame);
  std::copy(frame.begin(), frame.end(), data_.begin() + head_ * dim_);
  head_ = (head_ + 1) % depth_;
}

Vec FrameHistory::stacked_last(int count) const {
  if (count < 1 || count > depth_) throw Error("FrameHistory: bad frame count");
  Vec out(static_cast<std::size_t>(count) * dim_);
  for (int k = 0; k < count; ++k) {
    const int slot = (head_ + depth_ - count + k) % depth_;
    std::copy(data_.begin() + slot * dim_, data_.begin() + (slot + 1) * dim_,
              out.begin() + k * dim_);
  }
  return out;
}

Vec FrameHistory::stacked() const { return stacked_last(depth_); }

void FrameHistory::stacked_into(double* out) const {
  for (int k = 0; k < depth_; ++k) {
    const int slot = (head_ + k) % depth_;
    std::copy(data_.begin() + slot * dim_, data_.begin() + (slot + 1) * dim_, out + k * dim_);
  }
}

namespace {
Vec head(const Vec& v, std::size_t n) { return Vec(v.begin(), v.begin() + std::min(v.size(), n)); }
}  // namespace

FrameStack::FrameStack(const StackConfig& cfg, int proprio_dim, int privileged_dim)
    : cfg_(cfg),
      proprio_(cfg.proprio_frames, proprio_dim),
      clean_proprio_(cfg.proprio_frames, proprio_dim),
      privileged_(cfg.privileged_frames, privileged_dim),
      state_(std::max(cfg.state_frames, cfg.privileged_frames), proprio_dim + privileged_dim) {}

void FrameStack::reset(const Vec& noisy_proprio, const Vec& privileged, const Vec& state) {
  proprio_.reset(noisy_proprio);
  clean_proprio_.reset(head(state, noisy_proprio.size()));
  privileged_.reset(privileged);
  state_.reset(state);
}

void FrameStack::push(const Vec& noisy_proprio, const Vec& privileged, const Vec& state) {
  proprio_.push(noisy_proprio);
  clean_proprio_.push(head(state, noisy_proprio.size()));
  privileged_.push(privileged);
  state_.push(state);
}

}  // namespace wp::obs
