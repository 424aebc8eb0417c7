#include "vground/scaling.hpp"

#include <cmath>
#include <stdexcept>

namespace vground {

void ScalingConfig::validate() const {
  if (short_threshold <= 0 || long_threshold <= 0 || short_threshold >= long_threshold) {
    throw std::invalid_argument("scaling config: need 0 < short_threshold < long_threshold");
  }
  if (total_token_budget < long_threshold) {
    throw std::invalid_argument("scaling config: token budget must cover one frame per clip slot");
  }
  if (patch_size <= 0) {
    throw std::invalid_argument("scaling config: patch size must be positive");
  }
  if (!(fps > 0.0)) {
    throw std::invalid_argument("scaling config: fps must be positive");
  }
}

ScalingPlan plan(std::size_t n_frames, const ScalingConfig& config) {
  config.validate();
  if (n_frames == 0) {
    throw std::invalid_argument("plan: n_frames must be >= 1");
  }

  const auto budget = static_cast<std::size_t>(config.total_token_budget);
  const auto long_t = static_cast<std::size_t>(config.long_threshold);
  const auto short_t = static_cast<std::size_t>(config.short_threshold);

  ScalingPlan out;
  if (n_frames < long_t) {
    out.mode = n_frames < short_t ? ScalingMode::Resize : ScalingMode::Compress;
    out.per_frame_tokens = static_cast<int>(budget / n_frames);
    out.clips.push_back({0, n_frames});
    out.clip_tokens.push_back(out.per_frame_tokens);
    return out;
  }

  out.mode = ScalingMode::Partition;
  out.per_frame_tokens = static_cast<int>(budget / long_t);
  for (std::size_t begin = 0; begin < n_frames; begin += long_t) {
    const std::size_t end = std::min(begin + long_t, n_frames);
    out.clips.push_back({begin, end});
    // A short trailing clip gets its own budget from its actual length.
    out.clip_tokens.push_back(static_cast<int>(budget / (end - begin)));
  }
  return out;
}

std::pair<int, int> target_resolution(int n_res, double aspect_ratio, int patch) {
  if (n_res < 1) {
    throw std::invalid_argument("target_resolution: n_res must be >= 1");
  }
  if (!(aspect_ratio > 0.0)) {
    throw std::invalid_argument("target_resolution: aspect ratio must be positive");
  }
  constexpr int kMaxPatchesPerSide = 4096;

  const double want = std::log(aspect_ratio);
  long best_area = 0;
  double best_dist = 0.0;
  int best_h = 1;
  int best_w = 1;
  const int h_limit = std::min(n_res, kMaxPatchesPerSide);
  for (int h = 1; h <= h_limit; ++h) {
    int w = n_res / h;
    if (w > kMaxPatchesPerSide) w = kMaxPatchesPerSide;
    if (w == 0) break;
    const long area = static_cast<long>(h) * w;
    const double dist = std::abs(std::log(static_cast<double>(w) / h) - want);
    if (area > best_area || (area == best_area && dist < best_dist)) {
      best_area = area;
      best_dist = dist;
      best_h = h;
      best_w = w;
    }
  }
  return {best_h * patch, best_w * patch};
}

}  // namespace vground
