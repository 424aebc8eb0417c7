#include "vground/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace vground {

namespace {

// Implementation-independent uniform draw (uniform_real_distribution is not
// pinned by the standard, and samples must replay bit-exactly).
double uniform_double(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

FrameRange frames_covering(const FrameGrid& grid, double start, double end) {
  const auto fps = grid.fps;
  auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(start * fps - 1e-9)));
  auto last = static_cast<std::size_t>(std::max(0.0, std::floor(end * fps + 1e-9)));
  first = std::min(first, grid.size() - 1);
  last = std::min(last, grid.size() - 1);
  return {first, last + 1};
}

std::vector<double> overlapping_segment_heads(const FrameGrid& grid,
                                              const FrameRange& clip, int segment_length,
                                              const Moment& gt) {
  std::vector<double> heads;
  const auto step = static_cast<std::size_t>(segment_length);
  for (std::size_t begin = clip.begin; begin < clip.end; begin += step) {
    const std::size_t end = std::min(begin + step, clip.end);
    const double span_begin = grid.at(begin);
    const double span_end = end < grid.size() ? grid.at(end) : grid.duration;
    // Point-inclusive membership, matching the retrieval convention.
    if (gt.start < span_end && gt.end >= span_begin) {
      heads.push_back(span_begin);
    }
  }
  return heads;
}

}  // namespace

std::vector<TrainingSample> build_training_samples(
    const std::string& video_id, const FrameGrid& grid,
    const std::vector<std::pair<std::string, Moment>>& annotations,
    const DatagenConfig& config, std::uint64_t seed) {
  config.scaling.validate();
  if (annotations.empty()) {
    throw std::invalid_argument("build_training_samples: no annotations");
  }
  const auto short_t = static_cast<std::size_t>(config.scaling.short_threshold);
  const auto long_t = static_cast<std::size_t>(config.scaling.long_threshold);
  const double fps = grid.fps;
  const int decimals = decimals_for_fps(fps);
  const bool is_long = grid.size() > short_t;

  std::mt19937_64 rng(seed);
  std::vector<TrainingSample> samples;
  for (const auto& [query, gt] : annotations) {
    if (gt.start < 0.0 || gt.end > grid.duration + 1e-9 || gt.start > gt.end) {
      throw std::invalid_argument("build_training_samples: annotation '" + query +
                                  "' lies outside the video");
    }

    if (is_long) {
      // Coarse supervision mirrors inference-time partitioning: one sample
      // per clip that actually contains ground truth.
      for (std::size_t begin = 0; begin < grid.size(); begin += long_t) {
        const std::size_t end = std::min(begin + long_t, grid.size());
        const FrameRange clip{begin, end};
        const auto heads =
            overlapping_segment_heads(grid, clip, config.segment_length, gt);
        if (heads.empty()) continue;
        TrainingSample sample;
        sample.video_id = video_id;
        sample.frame_range = clip;
        sample.granularity = Granularity::Coarse;
        sample.query = query;
        sample.answer = render_segment_answer(heads, decimals);
        sample.is_long = is_long;
        samples.push_back(std::move(sample));
      }
    }

    // Fine supervision: a random crop that contains the ground truth, with
    // length uniform between the moment length and the short-video budget.
    const double gt_len = gt.length();
    double hi_len = std::min(static_cast<double>(short_t) / fps, grid.duration);
    if (hi_len < gt_len) hi_len = gt_len;
    const double crop_len = uniform_double(rng, gt_len, hi_len);
    const double lo_start = std::max(0.0, gt.end - crop_len);
    const double hi_start = std::min(gt.start, grid.duration - crop_len);
    const double crop_start = uniform_double(rng, lo_start, std::max(lo_start, hi_start));

    TrainingSample sample;
    sample.video_id = video_id;
    sample.frame_range = frames_covering(grid, crop_start, crop_start + crop_len);
    sample.granularity = Granularity::Fine;
    sample.query = query;
    sample.answer = render_answer(std::span(&gt, 1), decimals);
    sample.is_long = is_long;
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<TrainingSample> replicate_long(const std::vector<TrainingSample>& samples,
                                           int n_rep) {
  if (n_rep < 1) {
    throw std::invalid_argument("replicate_long: n_rep must be >= 1");
  }
  std::vector<std::string> video_order;
  std::map<std::string, std::vector<const TrainingSample*>> by_video;
  for (const auto& sample : samples) {
    auto& bucket = by_video[sample.video_id];
    if (bucket.empty()) video_order.push_back(sample.video_id);
    bucket.push_back(&sample);
  }
  std::vector<TrainingSample> out;
  for (const auto& video : video_order) {
    for (const auto* sample : by_video[video]) {
      const int copies = sample->is_long ? n_rep : 1;
      for (int i = 0; i < copies; ++i) out.push_back(*sample);
    }
  }
  return out;
}

bool PackedBatch::attention_allowed(std::size_t i, std::size_t j) const {
  if (j > i || i >= total_tokens) return false;
  if (j < video_tokens) return true;  // causal within video, video visible to all
  for (const auto& pair : qa_spans) {
    const TokenSpan span = pair.full();
    if (span.contains(i)) return span.contains(j);
  }
  return false;
}

std::vector<std::vector<bool>> PackedBatch::dense_mask() const {
  std::vector<std::vector<bool>> mask(total_tokens,
                                      std::vector<bool>(total_tokens, false));
  for (std::size_t i = 0; i < total_tokens; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      mask[i][j] = attention_allowed(i, j);
    }
  }
  return mask;
}

std::vector<std::vector<TokenSpan>> PackedBatch::mask_intervals() const {
  std::vector<std::vector<TokenSpan>> rows(total_tokens);
  for (std::size_t i = 0; i < total_tokens; ++i) {
    if (i < video_tokens) {
      rows[i].push_back({0, i + 1});
      continue;
    }
    rows[i].push_back({0, video_tokens});
    for (const auto& pair : qa_spans) {
      const TokenSpan span = pair.full();
      if (span.contains(i)) {
        rows[i].push_back({span.begin, i + 1});
        break;
      }
    }
  }
  return rows;
}

PackedBatch pack_video_centric(
    std::size_t video_token_count,
    const std::vector<std::pair<std::size_t, std::size_t>>& qa_pairs) {
  if (video_token_count < 1) {
    throw std::invalid_argument("pack_video_centric: need at least one video token");
  }
  if (qa_pairs.empty()) {
    throw std::invalid_argument("pack_video_centric: need at least one QA pair");
  }
  PackedBatch batch;
  batch.video_tokens = video_token_count;
  std::size_t cursor = video_token_count;
  for (const auto& [q_tokens, a_tokens] : qa_pairs) {
    if (q_tokens == 0 || a_tokens == 0) {
      throw std::invalid_argument("pack_video_centric: zero-length pair");
    }
    QaSpan span;
    span.query = {cursor, cursor + q_tokens};
    span.answer = {cursor + q_tokens, cursor + q_tokens + a_tokens};
    cursor = span.answer.end;
    batch.qa_spans.push_back(span);
  }
  batch.total_tokens = cursor;

  batch.position_index.resize(batch.total_tokens);
  batch.target_mask.assign(batch.total_tokens, false);
  for (std::size_t i = 0; i < video_token_count; ++i) {
    batch.position_index[i] = i;
  }
  for (const auto& pair : batch.qa_spans) {
    // Every pair restarts right after the video tokens' indices.
    std::size_t position = video_token_count;
    for (std::size_t i = pair.query.begin; i < pair.answer.end; ++i) {
      batch.position_index[i] = position++;
    }
    for (std::size_t i = pair.answer.begin; i < pair.answer.end; ++i) {
      batch.target_mask[i] = true;
    }
  }
  return batch;
}

double nll_loss(std::span<const double> per_token_logprobs,
                const std::vector<bool>& target_mask) {
  if (per_token_logprobs.size() != target_mask.size()) {
    throw std::invalid_argument("nll_loss: logprob/mask length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target_mask.size(); ++i) {
    if (target_mask[i]) sum -= per_token_logprobs[i];
  }
  return sum;
}

nlohmann::json TrainingSample::to_json() const {
  return {{"video_id", video_id},
          {"frame_begin", frame_range.begin},
          {"frame_end", frame_range.end},
          {"granularity", granularity == Granularity::Fine ? "fine" : "coarse"},
          {"query", query},
          {"answer", answer},
          {"is_long", is_long}};
}

nlohmann::json PackedBatch::to_json() const {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& pair : qa_spans) {
    spans.push_back({{"query", {pair.query.begin, pair.query.end}},
                     {"answer", {pair.answer.begin, pair.answer.end}}});
  }
  nlohmann::json intervals = nlohmann::json::array();
  for (const auto& row : mask_intervals()) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& span : row) cols.push_back({span.begin, span.end});
    intervals.push_back(std::move(cols));
  }
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < target_mask.size(); ++i) {
    if (target_mask[i]) targets.push_back(i);
  }
  return {{"video_tokens", video_tokens},
          {"total_tokens", total_tokens},
          {"qa_spans", std::move(spans)},
          {"position_index", position_index},
          {"target_indices", std::move(targets)},
          {"mask_intervals", std::move(intervals)}};
}

}  // namespace vground
