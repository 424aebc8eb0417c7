#include "vground/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vground {

Moment make_moment(double start, double end) {
  if (!std::isfinite(start) || !std::isfinite(end)) {
    throw std::invalid_argument("moment endpoints must be finite");
  }
  if (start < 0.0) {
    throw std::invalid_argument("moment start must be non-negative");
  }
  if (start > end) {
    throw std::invalid_argument("moment start must not exceed end");
  }
  return Moment{start, end};
}

FrameGrid make_grid(double duration, double fps) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("make_grid: duration must be positive");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw std::invalid_argument("make_grid: fps must be positive");
  }
  // Small slack so durations that are exact multiples of the step survive
  // the floating-point product (e.g. 3.0 * 2.0).
  const auto steps = static_cast<std::size_t>(std::floor(duration * fps + 1e-9));
  FrameGrid grid;
  grid.fps = fps;
  grid.duration = duration;
  grid.timestamps.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    grid.timestamps.push_back(static_cast<double>(i) / fps);
  }
  return grid;
}

double intersect_len(const Moment& a, const Moment& b) {
  return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

double union_len(const Moment& a, const Moment& b) {
  return a.length() + b.length() - intersect_len(a, b);
}

std::size_t snap_index_to(double t, std::span<const double> timestamps) {
  if (timestamps.empty()) {
    throw std::invalid_argument("snap: empty timestamp set");
  }
  auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.begin()) {
    return 0;
  }
  if (it == timestamps.end()) {
    return timestamps.size() - 1;
  }
  const auto hi = static_cast<std::size_t>(it - timestamps.begin());
  const auto lo = hi - 1;
  // Ties round toward the earlier timestamp.
  return (t - timestamps[lo] <= timestamps[hi] - t) ? lo : hi;
}

double snap_to(double t, std::span<const double> timestamps) {
  return timestamps[snap_index_to(t, timestamps)];
}

double snap(double t, const FrameGrid& grid) { return snap_to(t, grid.timestamps); }

std::size_t snap_index(double t, const FrameGrid& grid) {
  return snap_index_to(t, grid.timestamps);
}

}  // namespace vground
