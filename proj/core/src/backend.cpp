#include "vground/backend.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <mutex>

#include <nlohmann/json.hpp>

namespace vground {

namespace {

struct SequenceView {
  // Fine: one timestamp per frame. Coarse: one per segment head.
  std::vector<double> timestamps;
  std::vector<std::size_t> group_sizes;  // frames following each timestamp
};

SequenceView view_of(const PromptSequence& seq) {
  SequenceView view;
  for (const auto& element : seq.elements) {
    if (const auto* ts = std::get_if<TimestampText>(&element)) {
      view.timestamps.push_back(ts->seconds);
      view.group_sizes.push_back(0);
    } else if (!view.group_sizes.empty()) {
      ++view.group_sizes.back();
    }
  }
  return view;
}

}  // namespace

std::string interleaved_user_text(const PromptSequence& sequence) {
  std::string out;
  for (const auto& element : sequence.elements) {
    if (const auto* ts = std::get_if<TimestampText>(&element)) {
      out += ts->text;
      out += '\n';
    }
  }
  out += sequence.task_text;
  return out;
}

std::string canonical_prompt(const GenerationRequest& request) {
  std::string out = request.sequence.system_text;
  out += '\n';
  for (const auto& element : request.sequence.elements) {
    if (const auto* ts = std::get_if<TimestampText>(&element)) {
      out += ts->text;
      out += '\n';
    } else {
      const auto& frame = std::get<FrameRef>(element);
      out += "<frame:" + std::to_string(frame.frame_index) + ">\n";
    }
  }
  out += request.sequence.task_text;
  return out;
}

GenerationResult oracle_complete(const GenerationRequest& request, const Moment& truth,
                                 const OracleNoise& noise) {
  const auto& seq = request.sequence;
  const SequenceView view = view_of(seq);
  if (view.timestamps.empty()) {
    throw std::invalid_argument("oracle_complete: request has no timestamps");
  }
  const int decimals = seq.timestamp_decimals;
  const Moment shifted{truth.start + noise.offset_seconds,
                       truth.end + noise.offset_seconds};

  GenerationResult result;
  if (seq.granularity == Granularity::Fine) {
    const double first = view.timestamps.front();
    const double last = view.timestamps.back();
    double s = std::max(shifted.start, first);
    double e = std::min(shifted.end, last);
    if (s > e) {
      s = e = first;  // no overlap with the presented range
    }
    const Moment answer{snap_to(s, view.timestamps), snap_to(e, view.timestamps)};
    result.text = render_answer(std::span(&answer, 1), decimals);
    return result;
  }

  // Coarse: name the start timestamp of every segment whose span holds any
  // part of the truth. Spans run to the next head, the last one is open, and
  // membership is point-inclusive so a truth endpoint sitting exactly on a
  // head still selects that segment's frames.
  std::vector<double> heads;
  for (std::size_t j = 0; j < view.timestamps.size(); ++j) {
    const double begin = view.timestamps[j];
    const double end = j + 1 < view.timestamps.size()
                           ? view.timestamps[j + 1]
                           : std::numeric_limits<double>::infinity();
    if (shifted.start < end && shifted.end >= begin) {
      heads.push_back(begin);
    }
  }
  if (heads.empty()) {
    heads.push_back(view.timestamps.front());
  }
  result.text = render_segment_answer(heads, decimals);
  return result;
}

GenerationResult OracleBackend::complete(const GenerationRequest& request) {
  const auto it = truths_.find(request.sequence.query);
  if (it == truths_.end()) {
    throw std::invalid_argument("oracle backend: no hidden truth for query '" +
                                request.sequence.query + "'");
  }
  return oracle_complete(request, it->second, noise_);
}

FixtureBackend FixtureBackend::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw BackendError(BackendErrorKind::MissingFixture, false,
                       "cannot open fixture file: " + path);
  }
  nlohmann::json doc = nlohmann::json::parse(in);
  FixtureBackend backend;
  for (const auto& entry : doc.at("fixtures")) {
    backend.add(entry.at("prompt").get<std::string>(), entry.at("text").get<std::string>());
  }
  return backend;
}

void FixtureBackend::save_file(const std::string& path) const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [prompt, text] : fixtures_) {
    entries.push_back({{"prompt", prompt}, {"text", text}});
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write fixture file: " + path);
  }
  out << nlohmann::json{{"fixtures", entries}}.dump(2) << '\n';
}

void FixtureBackend::add(const std::string& prompt_key, const std::string& text) {
  fixtures_[prompt_key] = text;
}

GenerationResult FixtureBackend::complete(const GenerationRequest& request) {
  const auto key = canonical_prompt(request);
  const auto it = fixtures_.find(key);
  if (it == fixtures_.end()) {
    throw BackendError(BackendErrorKind::MissingFixture, false,
                       "no fixture recorded for prompt (" +
                           std::to_string(key.size()) + " bytes)");
  }
  return GenerationResult{it->second, std::nullopt, 0.0};
}

GenerationResult RecordingBackend::complete(const GenerationRequest& request) {
  auto result = inner_.complete(request);
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  sink_.add(canonical_prompt(request), result.text);
  return result;
}

}  // namespace vground
