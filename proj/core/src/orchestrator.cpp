#include "vground/orchestrator.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <stdexcept>

namespace vground {

namespace {

int per_frame_budget(std::size_t n_frames, const ScalingConfig& scaling) {
  const auto capped =
      std::min<std::size_t>(n_frames, static_cast<std::size_t>(scaling.long_threshold));
  return static_cast<int>(static_cast<std::size_t>(scaling.total_token_budget) / capped);
}

GenerationRequest request_for(PromptSequence sequence, const GroundingConfig& config) {
  GenerationRequest request;
  request.sequence = std::move(sequence);
  request.decoding.max_new_tokens = config.max_new_tokens;
  for (const auto& element : request.sequence.elements) {
    if (const auto* frame = std::get_if<FrameRef>(&element)) {
      request.frame_sources.emplace(
          frame->frame_index,
          config.frame_source ? config.frame_source(frame->frame_index)
                              : "frame://" + std::to_string(frame->frame_index));
    }
  }
  return request;
}

std::vector<std::size_t> frames_of_segments(const SegmentCatalog& catalog,
                                            const std::vector<std::size_t>& segment_ids,
                                            const std::vector<std::size_t>& frames) {
  // Segments tile the ordered candidate list; rebuild their offsets so
  // non-contiguous candidate sets map back to the right grid frames.
  std::vector<std::size_t> offsets(catalog.size() + 1, 0);
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    offsets[j + 1] = offsets[j] + catalog.segments[j].frame_count;
  }
  std::vector<std::size_t> out;
  for (std::size_t id : segment_ids) {
    const std::size_t end = std::min(offsets.at(id + 1), frames.size());
    for (std::size_t i = offsets[id]; i < end; ++i) out.push_back(frames[i]);
  }
  return out;
}

struct ClipOutcome {
  std::vector<std::size_t> kept_frames;
  StageTrace trace;
  bool fallback = false;
};

ClipOutcome run_clip_retrieval(const FrameGrid& grid,
                               const std::vector<std::size_t>& frames,
                               const std::string& query, const GroundingConfig& config,
                               Backend& backend, int stage) {
  ClipOutcome outcome;
  outcome.trace.stage = stage;
  outcome.trace.kind = StageKind::Coarse;
  outcome.trace.input_frames = frames.size();
  try {
    auto retrieval = retrieve_segments(grid, frames, query, config, backend);
    outcome.trace.retrieved_segments = retrieval.segments;
    outcome.trace.raw_text = std::move(retrieval.raw_text);
    outcome.kept_frames = frames_of_segments(retrieval.catalog, retrieval.segments, frames);
  } catch (const ParseFailure& failure) {
    // Keep every segment of this range: recall-preserving degradation.
    outcome.fallback = true;
    outcome.trace.raw_text = failure.what();
    outcome.kept_frames = frames;
  }
  return outcome;
}

}  // namespace

void GroundingConfig::validate() const {
  scaling.validate();
  if (segment_length < 1) {
    throw std::invalid_argument("grounding config: segment_length must be >= 1");
  }
  if (max_stages < 1) {
    throw std::invalid_argument("grounding config: max_stages must be >= 1");
  }
  if (max_kept_segments < 1) {
    throw std::invalid_argument("grounding config: max_kept_segments must be >= 1");
  }
}

RetrievalOutcome retrieve_segments(const FrameGrid& grid,
                                   const std::vector<std::size_t>& frames,
                                   const std::string& query,
                                   const GroundingConfig& config, Backend& backend) {
  if (frames.empty()) {
    throw std::invalid_argument("retrieve_segments: empty frame set");
  }
  auto coarse = build_coarse_sequence_over(grid, frames, config.segment_length, query,
                                           per_frame_budget(frames.size(), config.scaling),
                                           config.templates);
  auto result =
      backend.complete(request_for(std::move(coarse.sequence), config));

  RetrievalOutcome outcome;
  outcome.raw_text = result.text;
  outcome.segments = parse_coarse_answer(result.text, coarse.catalog);
  if (outcome.segments.size() > static_cast<std::size_t>(config.max_kept_segments)) {
    outcome.segments.resize(static_cast<std::size_t>(config.max_kept_segments));
  }
  outcome.catalog = std::move(coarse.catalog);
  return outcome;
}

RefineOutcome refine(const FrameGrid& grid, const std::vector<std::size_t>& candidates,
                     const std::string& query, const GroundingConfig& config,
                     Backend& backend) {
  if (candidates.empty()) {
    throw std::invalid_argument("refine: empty candidate set");
  }
  auto sequence =
      build_fine_sequence_over(grid, candidates, query,
                               per_frame_budget(candidates.size(), config.scaling),
                               config.templates);
  auto result =
      backend.complete(request_for(std::move(sequence), config));

  std::vector<double> timestamps;
  timestamps.reserve(candidates.size());
  for (std::size_t frame : candidates) timestamps.push_back(grid.at(frame));

  RefineOutcome outcome;
  outcome.raw_text = result.text;
  try {
    outcome.moments = parse_fine_answer(result.text, timestamps);
  } catch (const ParseFailure&) {
    outcome.moments = {Moment{timestamps.front(), timestamps.back()}};
    outcome.fallback_used = true;
  }
  return outcome;
}

GroundingResult ground(const FrameGrid& grid, const std::string& query,
                       const GroundingConfig& config, Backend& backend) {
  config.validate();
  if (grid.empty()) {
    throw std::invalid_argument("ground: empty frame grid");
  }

  const auto long_t = static_cast<std::size_t>(config.scaling.long_threshold);
  const auto short_t = static_cast<std::size_t>(config.scaling.short_threshold);

  GroundingResult result;
  std::vector<std::size_t> candidates(grid.size());
  std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  int stage = 0;

  // Clip-partition rounds. One stage slot is reserved for the fine pass.
  while (candidates.size() > long_t && stage + 1 < config.max_stages) {
    ++stage;
    std::vector<std::vector<std::size_t>> chunks;
    for (std::size_t begin = 0; begin < candidates.size(); begin += long_t) {
      const std::size_t end = std::min(begin + long_t, candidates.size());
      chunks.emplace_back(candidates.begin() + begin, candidates.begin() + end);
    }

    std::vector<ClipOutcome> outcomes(chunks.size());
    if (config.parallel_clips && chunks.size() > 1) {
      std::vector<std::future<ClipOutcome>> futures;
      futures.reserve(chunks.size());
      for (const auto& chunk : chunks) {
        futures.push_back(std::async(std::launch::async, run_clip_retrieval,
                                     std::cref(grid), std::cref(chunk), std::cref(query),
                                     std::cref(config), std::ref(backend), stage + 0));
      }
      for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
    } else {
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        outcomes[i] = run_clip_retrieval(grid, chunks[i], query, config, backend, stage);
      }
    }

    std::vector<std::size_t> next;
    for (auto& outcome : outcomes) {
      result.fallback_used |= outcome.fallback;
      result.stage_trace.push_back(std::move(outcome.trace));
      next.insert(next.end(), outcome.kept_frames.begin(), outcome.kept_frames.end());
    }
    candidates = std::move(next);  // chunks are processed in order, so sorted
  }

  if (candidates.size() > long_t) {
    // Stage budget exhausted before convergence; bound the final call.
    candidates.resize(long_t);
  }

  if (candidates.size() > short_t && stage + 1 < config.max_stages) {
    ++stage;
    auto outcome = run_clip_retrieval(grid, candidates, query, config, backend, stage);
    result.fallback_used |= outcome.fallback;
    result.stage_trace.push_back(std::move(outcome.trace));
    candidates = std::move(outcome.kept_frames);
  }

  ++stage;
  auto fine = refine(grid, candidates, query, config, backend);
  result.fallback_used |= fine.fallback_used;
  StageTrace trace;
  trace.stage = stage;
  trace.kind = StageKind::Fine;
  trace.input_frames = candidates.size();
  trace.raw_text = std::move(fine.raw_text);
  result.stage_trace.push_back(std::move(trace));
  result.moments = std::move(fine.moments);
  return result;
}

}  // namespace vground
