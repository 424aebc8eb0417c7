#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vground/promptseq.hpp"
#include "vground/scaling.hpp"
#include "vground/timeline.hpp"

namespace vground {

struct TrainingSample {
  std::string video_id;
  FrameRange frame_range;
  Granularity granularity = Granularity::Fine;
  std::string query;
  std::string answer;
  bool is_long = false;  // source video exceeds the short threshold

  nlohmann::json to_json() const;
};

struct DatagenConfig {
  ScalingConfig scaling;
  int segment_length = 32;
};

/// Multi-granularity training samples for one video: a coarse sample per
/// ground-truth-bearing clip when the video is long enough, plus one fine
/// sample over a random crop containing the ground truth. Reproducible for
/// a fixed seed.
std::vector<TrainingSample> build_training_samples(
    const std::string& video_id, const FrameGrid& grid,
    const std::vector<std::pair<std::string, Moment>>& annotations,
    const DatagenConfig& config, std::uint64_t seed);

/// Long-video samples repeated n_rep times, short ones once; output is
/// grouped by video in first-appearance order.
std::vector<TrainingSample> replicate_long(const std::vector<TrainingSample>& samples,
                                           int n_rep);

/// Half-open token span [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct QaSpan {
  TokenSpan query;
  TokenSpan answer;

  TokenSpan full() const { return {query.begin, answer.end}; }
};

/// Video-centric packed layout: [video tokens][Q1 A1][Q2 A2]... with
/// cross-pair attention blocked and every pair's positions restarting right
/// after the video tokens.
struct PackedBatch {
  std::size_t video_tokens = 0;
  std::vector<QaSpan> qa_spans;
  std::size_t total_tokens = 0;
  std::vector<std::size_t> position_index;
  std::vector<bool> target_mask;

  bool attention_allowed(std::size_t i, std::size_t j) const;
  std::vector<std::vector<bool>> dense_mask() const;
  /// Allowed column intervals per row; rows have at most two.
  std::vector<std::vector<TokenSpan>> mask_intervals() const;

  nlohmann::json to_json() const;
};

PackedBatch pack_video_centric(
    std::size_t video_token_count,
    const std::vector<std::pair<std::size_t, std::size_t>>& qa_pairs);

/// Negative log-likelihood over target positions only.
double nll_loss(std::span<const double> per_token_logprobs,
                const std::vector<bool>& target_mask);

}  // namespace vground
