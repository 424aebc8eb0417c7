#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vground {

/// A closed time interval [start, end] in seconds.
struct Moment {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }

  friend bool operator==(const Moment&, const Moment&) = default;
};

/// Validates start <= end, both finite and non-negative. Throws std::invalid_argument.
Moment make_moment(double start, double end);

/// The sampled timestamp set of a video: {0, 1/fps, 2/fps, ...} within [0, duration].
struct FrameGrid {
  std::vector<double> timestamps;
  double fps = 0.0;
  double duration = 0.0;

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }
  double at(std::size_t i) const { return timestamps[i]; }
  double front() const { return timestamps.front(); }
  double back() const { return timestamps.back(); }
};

FrameGrid make_grid(double duration, double fps);

/// Length of the overlap between two moments; 0 when disjoint or touching.
double intersect_len(const Moment& a, const Moment& b);

/// |a| + |b| - intersect_len(a, b).
double union_len(const Moment& a, const Moment& b);

/// Nearest timestamp in a sorted set; ties round toward the earlier entry,
/// out-of-range values clamp to the first/last entry.
double snap_to(double t, std::span<const double> timestamps);
std::size_t snap_index_to(double t, std::span<const double> timestamps);

double snap(double t, const FrameGrid& grid);
std::size_t snap_index(double t, const FrameGrid& grid);

}  // namespace vground
