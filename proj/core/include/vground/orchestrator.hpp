#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vground/backend.hpp"
#include "vground/promptseq.hpp"
#include "vground/scaling.hpp"
#include "vground/timeline.hpp"

namespace vground {

struct GroundingConfig {
  ScalingConfig scaling;
  int segment_length = 32;    // L_s
  int max_stages = 4;         // hard bound on retrieval + refinement rounds
  int max_kept_segments = 4;  // cap per retrieval call
  PromptTemplates templates;
  bool parallel_clips = true;  // per-clip retrievals within one stage
  int max_new_tokens = 256;
  // Maps a frame index to the image reference sent to the backend; defaults
  // to an opaque frame:// URI when unset (oracle and fixture runs).
  std::function<std::string(std::size_t)> frame_source;

  void validate() const;
};

enum class StageKind { Coarse, Fine };

struct StageTrace {
  int stage = 0;  // 1-based round; clip calls of one round share a number
  StageKind kind = StageKind::Coarse;
  std::size_t input_frames = 0;
  std::vector<std::size_t> retrieved_segments;  // catalog indices, coarse only
  std::string raw_text;
};

struct GroundingResult {
  std::vector<Moment> moments;
  std::vector<StageTrace> stage_trace;
  bool fallback_used = false;
};

struct RetrievalOutcome {
  std::vector<std::size_t> segments;  // capped, ascending
  SegmentCatalog catalog;
  std::string raw_text;
};

struct RefineOutcome {
  std::vector<Moment> moments;
  std::string raw_text;
  bool fallback_used = false;
};

/// One coarse retrieval over an ordered (possibly non-contiguous) frame set.
/// Never returns an empty list; a reply with no usable timestamp raises
/// ParseFailure for the caller to handle.
RetrievalOutcome retrieve_segments(const FrameGrid& grid,
                                   const std::vector<std::size_t>& frames,
                                   const std::string& query,
                                   const GroundingConfig& config, Backend& backend);

/// Fine-grained pass over candidate frames. Candidates keep their original
/// timestamps, so gaps between selected segments stay visible to the model.
/// A parse failure degrades to the full candidate span.
RefineOutcome refine(const FrameGrid& grid, const std::vector<std::size_t>& candidates,
                     const std::string& query, const GroundingConfig& config,
                     Backend& backend);

/// Full multi-stage grounding: short inputs go straight to the fine pass,
/// mid-length inputs get one retrieval round first, and over-long inputs are
/// partitioned into clips whose retrievals are aggregated (recursively, up to
/// max_stages) before refinement.
GroundingResult ground(const FrameGrid& grid, const std::string& query,
                       const GroundingConfig& config, Backend& backend);

}  // namespace vground
