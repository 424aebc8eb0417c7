#include "vground/perturb.hpp"

#include <algorithm>
#include <random>
#include <regex>
#include <stdexcept>

#include "vground/metrics.hpp"

namespace vground {

namespace {

double uniform_double(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

const std::string kDecompositionPrompt = R"(Analyze the given query and:
1. Identify ONLY concrete, specific objects (nouns) that are:
   - Tangible physical items
   - Clearly named (not pronouns/ambiguous)
2. STRICTLY EXCLUDE:
   - All human references (person, he, she, they, etc.)
   - Ambiguous terms (something, anything, things, etc.)
   - Pronouns (it, they, them)
   - Abstract concepts
3. For each valid object, generate EXACTLY ONE question:
   "When does [OBJECT] appear?"

Negative Examples (BAD):
Input: "Someone left some items on the furniture"
Wrong Output:
-When does the furniture appear?
-When does some items appear?  # <-- AMBIGUOUS TERM SHOULD BE EXCLUDED

Positive Examples (GOOD):
Input: "The machine processed the raw materials during the night"
Output:
-When does the machine appear?
-When does the raw materials appear?
-When does the night appear?

Analyze: {query})";

}  // namespace

double default_crop_len(const Moment& event, double duration) {
  return std::min(std::max(2.0 * event.length(), 30.0), duration);
}

ShiftedSample time_shift_sample(const std::string& video_id, double duration,
                                const Moment& event, double crop_len,
                                std::uint64_t seed) {
  if (event.start < 0.0 || event.end > duration || event.start > event.end) {
    throw std::invalid_argument("time_shift_sample: event outside the video");
  }
  if (crop_len < event.length()) {
    throw std::invalid_argument("time_shift_sample: crop shorter than the event");
  }
  if (crop_len > duration) {
    crop_len = duration;  // degenerate: no displacement possible
  }
  const double lo = std::max(0.0, event.end - crop_len);
  const double hi = std::min(event.start, duration - crop_len);

  std::mt19937_64 rng(seed);
  const double start = uniform_double(rng, lo, std::max(lo, hi));

  ShiftedSample sample;
  sample.video_id = video_id;
  sample.crop = {start, start + crop_len};
  sample.event_in_crop = {event.start - start, event.end - start};
  sample.seed = seed;
  return sample;
}

const std::string& decomposition_prompt_template() { return kDecompositionPrompt; }

Decomposition decompose_query(const std::string& query, Backend& backend) {
  if (query.empty()) {
    throw std::invalid_argument("decompose_query: empty query");
  }
  std::string task = kDecompositionPrompt;
  const std::string needle = "{query}";
  task.replace(task.find(needle), needle.size(), query);

  GenerationRequest request;
  request.sequence.system_text = PromptTemplates{}.system;
  request.sequence.task_text = std::move(task);
  request.sequence.query = query;
  const auto result = backend.complete(request);

  static const std::regex question_re(R"((when\s+does\s+.+?\s+appear\?))",
                                      std::regex::icase);
  Decomposition decomposition;
  auto begin =
      std::sregex_iterator(result.text.begin(), result.text.end(), question_re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::string question = (*it)[1].str();
    if (std::find(decomposition.questions.begin(), decomposition.questions.end(),
                  question) == decomposition.questions.end()) {
      decomposition.questions.push_back(question);
    }
  }
  decomposition.warning = decomposition.questions.empty();
  return decomposition;
}

double iog_of_decomposition(const std::vector<std::vector<Moment>>& predictions,
                            const Moment& original_gt) {
  if (predictions.empty()) {
    throw std::invalid_argument("iog_of_decomposition: no object-query results");
  }
  double sum = 0.0;
  for (const auto& moments : predictions) {
    sum += moments.empty() ? 0.0 : iog(moments.front(), original_gt);
  }
  return sum / static_cast<double>(predictions.size());
}

}  // namespace vground
