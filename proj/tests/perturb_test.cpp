#include <doctest.h>

#include <random>

#include "support.hpp"
#include "vground/perturb.hpp"

using namespace vground;

TEST_CASE("time shift draws crop starts from the feasible interval") {
  std::mt19937_64 seeds(1);
  for (int i = 0; i < 500; ++i) {
    const auto sample = time_shift_sample("v", 100.0, {80.0, 90.0}, 30.0, seeds());
    CHECK(sample.crop.start >= 60.0);
    CHECK(sample.crop.start <= 70.0);
    CHECK(sample.crop.length() == doctest::Approx(30.0));
    CHECK(sample.event_in_crop.length() == 10.0);
    // The crop still contains the event.
    CHECK(sample.crop.start <= 80.0);
    CHECK(sample.crop.end >= 90.0);
  }
}

TEST_CASE("degenerate shifts") {
  SUBCASE("crop as long as the event leaves no freedom") {
    const auto sample = time_shift_sample("v", 100.0, {40.0, 70.0}, 30.0, 9);
    CHECK(sample.crop == Moment{40.0, 70.0});
    CHECK(sample.event_in_crop == Moment{0.0, 30.0});
  }
  SUBCASE("event at the start pins the crop to zero") {
    const auto sample = time_shift_sample("v", 100.0, {0.0, 10.0}, 30.0, 9);
    CHECK(sample.crop.start == 0.0);
  }
  SUBCASE("over-long crops clamp to the whole video") {
    const auto sample = time_shift_sample("v", 50.0, {10.0, 20.0}, 400.0, 9);
    CHECK(sample.crop == Moment{0.0, 50.0});
  }
}

TEST_CASE("time shift validates inputs and replays by seed") {
  CHECK_THROWS_AS(time_shift_sample("v", 100.0, {90.0, 110.0}, 30.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(time_shift_sample("v", 100.0, {10.0, 40.0}, 5.0, 1),
                  std::invalid_argument);
  const auto a = time_shift_sample("v", 100.0, {80.0, 90.0}, 30.0, 1234);
  const auto b = time_shift_sample("v", 100.0, {80.0, 90.0}, 30.0, 1234);
  CHECK(a.crop == b.crop);
}

TEST_CASE("crop starts look uniform over their interval") {
  // 10-bin chi-square over [60, 70]; 9 dof critical value at p = 0.01.
  constexpr double kChi2Critical99 = 21.666;
  const int draws = 2000;
  int bins[10] = {};
  for (int i = 0; i < draws; ++i) {
    const auto sample =
        time_shift_sample("v", 100.0, {80.0, 90.0}, 30.0, 5000 + i);
    auto bin = static_cast<int>((sample.crop.start - 60.0));
    if (bin == 10) bin = 9;
    ++bins[bin];
  }
  const double expected = draws / 10.0;
  double chi2 = 0.0;
  for (int count : bins) {
    chi2 += (count - expected) * (count - expected) / expected;
  }
  CHECK(chi2 < kChi2Critical99);
}

TEST_CASE("default crop length permits displacement and fits the video") {
  CHECK(default_crop_len({10.0, 12.0}, 100.0) == doctest::Approx(30.0));
  CHECK(default_crop_len({10.0, 40.0}, 100.0) == doctest::Approx(60.0));
  CHECK(default_crop_len({1.0, 3.0}, 20.0) == doctest::Approx(20.0));
}

TEST_CASE("decompose_query parses object questions from the reply") {
  SUBCASE("two questions, duplicates removed") {
    test::LambdaBackend backend([](const GenerationRequest& request) {
      CHECK(request.sequence.task_text.find("Analyze: person opens the refrigerator") !=
            std::string::npos);
      CHECK(request.sequence.task_text.find("{query}") == std::string::npos);
      return GenerationResult{
          "-When does the refrigerator appear?\n"
          "-When does the refrigerator appear?\n"
          "-When does the door appear?\n",
          std::nullopt, 0.0};
    });
    const auto result = decompose_query("person opens the refrigerator", backend);
    REQUIRE(result.questions.size() == 2);
    CHECK(result.questions[0] == "When does the refrigerator appear?");
    CHECK(result.questions[1] == "When does the door appear?");
    CHECK_FALSE(result.warning);
  }
  SUBCASE("no groundable object flags a warning") {
    test::LambdaBackend backend([](const GenerationRequest&) {
      return GenerationResult{"No concrete objects found.", std::nullopt, 0.0};
    });
    const auto result = decompose_query("someone left some items", backend);
    CHECK(result.questions.empty());
    CHECK(result.warning);
  }
  SUBCASE("prompt template carries the exclusion rules") {
    const auto& prompt = decomposition_prompt_template();
    CHECK(prompt.find("STRICTLY EXCLUDE") != std::string::npos);
    CHECK(prompt.find("When does [OBJECT] appear?") != std::string::npos);
  }
}

TEST_CASE("decomposition IoG averages top-1 predictions against the truth") {
  const Moment gt{0.0, 10.0};
  CHECK(iog_of_decomposition({{{0.0, 10.0}}}, gt) == doctest::Approx(1.0));
  CHECK(iog_of_decomposition({{{0.0, 5.0}}}, gt) == doctest::Approx(0.5));
  CHECK(iog_of_decomposition({{{0.0, 10.0}}, {{0.0, 5.0}}}, gt) ==
        doctest::Approx(0.75));
  CHECK_THROWS_AS(iog_of_decomposition({}, gt), std::invalid_argument);
}
