#include <doctest.h>

#include <random>

#include "support.hpp"
#include "vground/vqa.hpp"

using namespace vground;

namespace {

QAItem sample_item(std::string id = "i0") {
  QAItem item;
  item.id = std::move(id);
  item.video_id = "v0";
  item.question = "What happens?";
  item.options = {"first", "second", "third", "fourth"};
  item.correct_label = 'B';
  item.duration = 500.0;
  return item;
}

}  // namespace

TEST_CASE("extend_window worked examples") {
  CHECK(extend_window({100.0, 110.0}, 500.0) == Moment{89.0, 121.0});
  CHECK(extend_window({2.0, 10.0}, 500.0) == Moment{0.0, 32.0});
  CHECK(extend_window({0.0, 40.0}, 500.0) == Moment{0.0, 40.0});
  CHECK(extend_window({480.0, 495.0}, 500.0) == Moment{468.0, 500.0});
  CHECK(extend_window({3.0, 5.0}, 20.0) == Moment{0.0, 20.0});
}

TEST_CASE("extend_window is idempotent and bounded") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    const double duration = test::uniform(rng, 1.0, 600.0);
    const double s = test::uniform(rng, 0.0, duration);
    const Moment pred{s, std::min(duration, s + test::uniform(rng, 0.0, 60.0))};
    const Moment once = extend_window(pred, duration);
    CHECK(once.start >= 0.0);
    CHECK(once.end <= duration + 1e-9);
    CHECK(once.length() >= std::min(32.0, duration) - 1e-9);
    CHECK(once.length() >= pred.length() - 1e-9);
    const Moment twice = extend_window(once, duration);
    CHECK(twice.start == doctest::Approx(once.start).epsilon(1e-12));
    CHECK(twice.end == doctest::Approx(once.end).epsilon(1e-12));
  }
}

TEST_CASE("window sampling is strictly increasing and stays inside") {
  const Moment window{10.0, 42.0};
  const auto timestamps = sample_window_timestamps(window);
  REQUIRE(timestamps.size() == 32);
  CHECK(timestamps.front() == doctest::Approx(10.0));
  CHECK(timestamps.back() == doctest::Approx(42.0));
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    CHECK(timestamps[i] > timestamps[i - 1]);
    CHECK(timestamps[i] >= window.start);
    CHECK(timestamps[i] <= window.end);
  }
}

TEST_CASE("option labels parse from noisy replies") {
  CHECK(parse_option_label("(B)", 4) == 'B');
  CHECK(parse_option_label("Best Option: C", 4) == 'C');
  CHECK(parse_option_label("I am unsure", 4) == std::nullopt);
  CHECK(parse_option_label("the answer is (d).", 4) == 'D');
  CHECK(parse_option_label("A", 4) == 'A');
  CHECK(parse_option_label("Cat", 4) == std::nullopt);  // not standalone
  CHECK(parse_option_label("E", 4) == std::nullopt);    // out of range
}

TEST_CASE("QA requests carry 32 frames and the option template") {
  const auto item = sample_item();
  const auto grid = make_grid(item.duration, 2.0);
  const auto request = build_qa_request(item, {100.0, 132.0}, grid);
  CHECK(request.sequence.count_frames() == 32);
  CHECK(request.frame_sources.size() <= 32);
  const auto& task = request.sequence.task_text;
  CHECK(task.find("Question: What happens?") != std::string::npos);
  CHECK(task.find("(A) first") != std::string::npos);
  CHECK(task.find("(D) fourth") != std::string::npos);
  CHECK(task.find("Please only give the best option.") != std::string::npos);
  CHECK(task.rfind("Best Option:") == task.size() - 12);
}

TEST_CASE("QA items validate their option lists") {
  auto item = sample_item();
  item.options = {"only one"};
  CHECK_THROWS_AS(item.validate(), std::invalid_argument);
  item.options = {"a", "b"};
  item.correct_label = 'C';
  CHECK_THROWS_AS(item.validate(), std::invalid_argument);
}

TEST_CASE("evaluate_qa scores accuracy and grounding") {
  std::vector<QAItem> items;
  std::map<std::string, std::vector<Moment>> grounding;
  for (int i = 0; i < 4; ++i) {
    auto item = sample_item("i" + std::to_string(i));
    item.gt_moment = Moment{100.0, 110.0};
    items.push_back(item);
    grounding[item.id] = {{100.0, 110.0}};
  }

  SUBCASE("all correct") {
    test::LambdaBackend backend([](const GenerationRequest&) {
      return GenerationResult{"(B)", std::nullopt, 0.0};
    });
    const auto result = evaluate_qa(items, grounding, backend);
    CHECK(result.accuracy == 1.0);
    CHECK(result.unanswered == 0);
    REQUIRE(result.grounding.has_value());
    CHECK(result.grounding->miou == 1.0);
  }
  SUBCASE("half correct, unanswered scored wrong") {
    int call = 0;
    test::LambdaBackend backend([&call](const GenerationRequest&) {
      const char* replies[] = {"(B)", "(A)", "Best Option: B", "no clue"};
      return GenerationResult{replies[call++ % 4], std::nullopt, 0.0};
    });
    const auto result = evaluate_qa(items, grounding, backend);
    CHECK(result.accuracy == doctest::Approx(0.5));
    CHECK(result.unanswered == 1);
  }
  SUBCASE("missing grounding entry is an error") {
    grounding.erase("i2");
    test::LambdaBackend backend([](const GenerationRequest&) {
      return GenerationResult{"(B)", std::nullopt, 0.0};
    });
    CHECK_THROWS_AS(evaluate_qa(items, grounding, backend), std::invalid_argument);
  }
}
