#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace vground {

/// Half-open range of frame indices [begin, end).
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }

  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

struct ScalingConfig {
  int total_token_budget = 16384;
  int short_threshold = 128;   // max frames for a short video
  int long_threshold = 1024;   // max frames for a single pass
  int patch_size = 14;
  double fps = 2.0;

  /// Throws std::invalid_argument when thresholds are inconsistent.
  void validate() const;
};

enum class ScalingMode { Resize, Compress, Partition };

/// The budget decision for one video: how many tokens each frame gets and,
/// for over-long inputs, how the frames split into clips. The pixel/feature
/// work itself (resizing, token interpolation) is owned by the backend.
struct ScalingPlan {
  ScalingMode mode = ScalingMode::Resize;
  int per_frame_tokens = 0;              // budget of a full-length clip
  std::vector<FrameRange> clips;         // tiles [0, n_frames) exactly
  std::vector<int> clip_tokens;          // per-frame budget per clip
  std::optional<std::pair<int, int>> target_resolution;  // (height, width), px
};

ScalingPlan plan(std::size_t n_frames, const ScalingConfig& config);

/// Largest (height, width) whose patch grid fits in n_res patches of
/// patch x patch pixels, preferring the layout whose w/h is closest to
/// aspect_ratio. Both dimensions are multiples of patch.
std::pair<int, int> target_resolution(int n_res, double aspect_ratio, int patch);

}  // namespace vground
