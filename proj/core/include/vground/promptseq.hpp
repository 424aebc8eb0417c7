#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vground/scaling.hpp"
#include "vground/timeline.hpp"

namespace vground {

/// Raised when a model reply contains nothing the grammar recognizes.
/// Callers (the orchestrator) own the fallback policy.
class ParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Granularity { Fine, Coarse };

struct TimestampText {
  double seconds = 0.0;
  std::string text;  // rendered form, e.g. "timestamp: 1.5 seconds"
};

struct FrameRef {
  std::size_t frame_index = 0;
  int token_budget = 0;
};

using SequenceElement = std::variant<TimestampText, FrameRef>;

/// Prompt template text. Defaults are the production strings; any of them
/// can be overridden through configuration. {query} is substituted.
struct PromptTemplates {
  std::string system = "You are a helpful assistant.";
  std::string fine_task =
      "This is a sequence interleaved with timestamps and frames.\n"
      "Your task is to identify the temporal window (start and end timestamps) "
      "when the given query appears.\n"
      "Query: {query}\n"
      "Answer:";
  std::string coarse_task =
      "This is a sequence interleaved with timestamps and frames.\n"
      "Your task is to identify the specific timestamp(s) when the given query "
      "appears.\n"
      "Query: {query}\n"
      "Answer:";
};

/// An ordered, timestamp-interleaved model input: timestamp text elements
/// followed by the frame references they annotate, then the task text with
/// the query. Budget tokens count visual allowance per frame; subword
/// tokenization is a backend concern.
struct PromptSequence {
  std::vector<SequenceElement> elements;
  std::string system_text;
  std::string task_text;  // template with {query} already substituted
  std::string query;
  Granularity granularity = Granularity::Fine;
  int segment_length = 0;      // L_s; meaningful for Coarse
  int timestamp_decimals = 1;  // precision used to render timestamps

  std::size_t count_timestamps() const;
  std::size_t count_frames() const;
  /// Checks the interleaving invariants; throws std::logic_error on violation.
  void validate() const;
};

struct Segment {
  std::size_t index = 0;
  std::size_t start_frame = 0;       // grid frame index of the first frame
  double start_timestamp = 0.0;      // grid timestamp of start_frame
  std::size_t frame_count = 0;
};

/// Built alongside a coarse sequence; maps retrieved timestamps back to
/// segments and their frames.
struct SegmentCatalog {
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
  std::size_t size() const { return segments.size(); }
  std::vector<double> start_timestamps() const;
};

/// Decimal places needed so distinct grid steps stay distinct when rendered.
int decimals_for_fps(double fps);

std::string render_timestamp(double seconds, int decimals = 1);

/// "From {s} seconds to {e} seconds", clauses joined by "; ".
std::string render_answer(std::span<const Moment> moments, int decimals = 1);

/// Coarse answer form: "{t} seconds" clauses joined by ", ".
std::string render_segment_answer(std::span<const double> start_timestamps,
                                  int decimals = 1);

PromptSequence build_fine_sequence(const FrameGrid& grid, const FrameRange& range,
                                   const std::string& query, int budget,
                                   const PromptTemplates& templates = {});

/// Candidate frames may be non-contiguous; they keep their true grid
/// timestamps so temporal position survives re-selection.
PromptSequence build_fine_sequence_over(const FrameGrid& grid,
                                        std::span<const std::size_t> frames,
                                        const std::string& query, int budget,
                                        const PromptTemplates& templates = {});

struct CoarseSequence {
  PromptSequence sequence;
  SegmentCatalog catalog;
};

CoarseSequence build_coarse_sequence(const FrameGrid& grid, const FrameRange& range,
                                     int segment_length, const std::string& query,
                                     int budget, const PromptTemplates& templates = {});

CoarseSequence build_coarse_sequence_over(const FrameGrid& grid,
                                          std::span<const std::size_t> frames,
                                          int segment_length, const std::string& query,
                                          int budget,
                                          const PromptTemplates& templates = {});

/// Extracts every "From X seconds to Y seconds" clause (case-insensitive,
/// prose-tolerant), snaps endpoints to the given timestamps, swaps inverted
/// pairs, and de-duplicates in order. Throws ParseFailure when no clause.
std::vector<Moment> parse_fine_answer(const std::string& text,
                                      std::span<const double> timestamps);
std::vector<Moment> parse_fine_answer(const std::string& text, const FrameGrid& grid);

/// Extracts every numeral followed by "seconds", maps each to the nearest
/// segment start, and returns de-duplicated indices in ascending order.
/// Throws ParseFailure when no numeral is found.
std::vector<std::size_t> parse_coarse_answer(const std::string& text,
                                             const SegmentCatalog& catalog);

}  // namespace vground
