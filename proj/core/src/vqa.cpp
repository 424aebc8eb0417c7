#include "vground/vqa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace vground {

namespace {

const std::string kQaTaskHead = "Question: ";

std::string qa_task_text(const QAItem& item) {
  std::string text = kQaTaskHead + item.question + "\nOptions:\n";
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    text += '(';
    text += static_cast<char>('A' + i);
    text += ") " + item.options[i] + "\n";
  }
  text += "Please only give the best option.\nBest Option:";
  return text;
}

}  // namespace

void QAItem::validate() const {
  if (options.size() < 2 || options.size() > 26) {
    throw std::invalid_argument("qa item '" + id + "': need 2..26 options");
  }
  if (correct_label < 'A' ||
      correct_label >= static_cast<char>('A' + options.size())) {
    throw std::invalid_argument("qa item '" + id + "': correct label out of range");
  }
  if (!(duration > 0.0)) {
    throw std::invalid_argument("qa item '" + id + "': duration must be positive");
  }
}

Moment extend_window(const Moment& pred, double duration, double min_len) {
  if (duration < min_len) {
    return {0.0, duration};
  }
  // Slack keeps the operation idempotent: a grown window re-entering here
  // may measure a hair under min_len after rounding.
  if (pred.length() >= min_len - 1e-9) {
    return pred;
  }
  const double center = (pred.start + pred.end) / 2.0;
  double start = center - min_len / 2.0;
  double end = center + min_len / 2.0;
  if (start < 0.0) {
    end -= start;
    start = 0.0;
  } else if (end > duration) {
    start -= end - duration;
    end = duration;
  }
  return {start, end};
}

std::vector<double> sample_window_timestamps(const Moment& window, std::size_t count) {
  if (count < 2 || window.length() <= 0.0) {
    throw std::invalid_argument("sample_window_timestamps: degenerate window");
  }
  std::vector<double> out;
  out.reserve(count);
  const double step = window.length() / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(window.start + step * static_cast<double>(i));
  }
  out.back() = window.end;
  return out;
}

GenerationRequest build_qa_request(const QAItem& item, const Moment& window,
                                   const FrameGrid& grid, std::size_t frame_count) {
  item.validate();
  GenerationRequest request;
  auto& seq = request.sequence;
  seq.system_text = PromptTemplates{}.system;
  seq.task_text = qa_task_text(item);
  seq.query = item.question;
  for (double t : sample_window_timestamps(window, frame_count)) {
    const std::size_t frame = snap_index(t, grid);
    seq.elements.push_back(FrameRef{frame, 0});
    request.frame_sources.emplace(frame, "frame://" + std::to_string(frame));
  }
  request.decoding.max_new_tokens = 16;
  return request;
}

std::optional<char> parse_option_label(const std::string& text,
                                       std::size_t option_count) {
  std::string body = text;
  // Models often echo the prompt tail; drop it before scanning.
  const std::string echo = "Best Option:";
  for (auto pos = body.find(echo); pos != std::string::npos; pos = body.find(echo)) {
    body.erase(pos, echo.size());
  }
  const char last_label = static_cast<char>('A' + option_count - 1);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(body[i])));
    if (upper < 'A' || upper > last_label) continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(body[i - 1]));
    const bool right_ok =
        i + 1 >= body.size() || !std::isalnum(static_cast<unsigned char>(body[i + 1]));
    if (left_ok && right_ok) {
      return upper;
    }
  }
  return std::nullopt;
}

QAAnswer answer(const QAItem& item, const Moment& window, const FrameGrid& grid,
                Backend& qa_backend) {
  const auto result = qa_backend.complete(build_qa_request(item, window, grid));
  return {parse_option_label(result.text, item.options.size()), result.text};
}

QAEvalResult evaluate_qa(const std::vector<QAItem>& items,
                         const std::map<std::string, std::vector<Moment>>& grounding,
                         Backend& qa_backend, double fps) {
  if (items.empty()) {
    throw std::invalid_argument("evaluate_qa: no items");
  }
  QAEvalResult result;
  std::size_t correct = 0;
  std::vector<EvalRecord> grounded;
  for (const auto& item : items) {
    const auto it = grounding.find(item.id);
    if (it == grounding.end()) {
      throw std::invalid_argument("evaluate_qa: no grounding result for item '" +
                                  item.id + "'");
    }
    const auto& moments = it->second;
    const Moment top1 = moments.empty() ? Moment{0.0, item.duration} : moments.front();
    const Moment window = extend_window(top1, item.duration);
    const FrameGrid grid = make_grid(item.duration, fps);

    auto qa = answer(item, window, grid, qa_backend);
    if (!qa.label) {
      ++result.unanswered;  // scored wrong
    } else if (*qa.label == item.correct_label) {
      ++correct;
    }
    result.answers.push_back(std::move(qa));

    if (item.gt_moment) {
      grounded.push_back(EvalRecord{item.id, moments, {*item.gt_moment}, {}, {}});
    }
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
  if (!grounded.empty()) {
    const double thresholds[] = {0.3, 0.5};
    result.grounding = evaluate(grounded, thresholds);
  }
  return result;
}

}  // namespace vground
