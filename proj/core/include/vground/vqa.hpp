#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vground/backend.hpp"
#include "vground/metrics.hpp"
#include "vground/timeline.hpp"

namespace vground {

struct QAItem {
  std::string id;
  std::string video_id;
  std::string question;
  std::vector<std::string> options;  // labelled A.. in order
  char correct_label = 'A';
  double duration = 0.0;
  std::optional<Moment> gt_moment;  // grounded benchmarks only

  void validate() const;  // 2..26 options, correct label in range
};

/// Grows a short predicted window symmetrically about its center to min_len
/// seconds, shifting inside [0, duration] when an edge overflows. Windows
/// already long enough pass through; videos shorter than min_len yield the
/// whole video.
Moment extend_window(const Moment& pred, double duration, double min_len = 32.0);

/// count timestamps evenly spaced across the window, endpoints included.
std::vector<double> sample_window_timestamps(const Moment& window,
                                             std::size_t count = 32);

/// The multiple-choice request exactly as the QA pipeline sends it: frame
/// references sampled from the window plus the option template.
GenerationRequest build_qa_request(const QAItem& item, const Moment& window,
                                   const FrameGrid& grid, std::size_t frame_count = 32);

struct QAAnswer {
  std::optional<char> label;  // absent when no option letter was parsable
  std::string raw_text;
};

QAAnswer answer(const QAItem& item, const Moment& window, const FrameGrid& grid,
                Backend& qa_backend);

/// First standalone option letter in a reply, after stripping the literal
/// "Best Option:" echo. Case-insensitive; parentheses optional.
std::optional<char> parse_option_label(const std::string& text,
                                       std::size_t option_count);

struct QAEvalResult {
  double accuracy = 0.0;
  std::size_t unanswered = 0;
  std::optional<MetricReport> grounding;  // present when items carry gt moments
  std::vector<QAAnswer> answers;          // aligned with the item order
};

/// Retrieval-augmented QA over a batch: each item's predicted moment is
/// widened with extend_window, 32 frames are sampled from it, and the answer
/// accuracy (plus grounding metrics when ground truth exists) is reported.
QAEvalResult evaluate_qa(const std::vector<QAItem>& items,
                         const std::map<std::string, std::vector<Moment>>& grounding,
                         Backend& qa_backend, double fps = 2.0);

}  // namespace vground
