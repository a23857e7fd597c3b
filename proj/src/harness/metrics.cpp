#include "walkprior/harness/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace wp::harness {

double tracking_error(std::span<const double> commanded, std::span<const double> measured) {
  if (commanded.size() != measured.size()) throw Error("tracking_error: trace length mismatch");
  if (commanded.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < commanded.size(); ++i) sum += std::abs(commanded[i] - measured[i]);
  return sum / static_cast<double>(commanded.size());
}

double positive_work(const PowerTrace& trace) {
  if (trace.torque.size() != trace.joint_vel.size() || trace.joints <= 0 ||
      trace.torque.size() % trace.joints != 0) {
    throw Error("cost_of_transport: malformed power trace");
  }
  double w = 0.0;
  for (std::size_t i = 0; i < trace.torque.size(); ++i) {
    w += std::max(trace.torque[i] * trace.joint_vel[i], 0.0) * trace.dt;
  }
  return w;
}

std::optional<double> cost_of_transport(const PowerTrace& trace, double mass, double gravity,
                                        double distance) {
  const double w = positive_work(trace);
  if (std::abs(distance) < kMinCotDistance) return std::nullopt;
  return w / (mass * gravity * std::abs(distance));
}

std::optional<double> cost_of_transport(const env::EpisodeSummary& ep) {
  if (std::abs(ep.distance) < kMinCotDistance || ep.weight <= 0.0) return std::nullopt;
  return ep.positive_work / (ep.weight * std::abs(ep.distance));
}

}  // namespace wp::harness
