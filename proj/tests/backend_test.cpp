#include <doctest.h>

#include <filesystem>

#include "support.hpp"
#include "vground/backend.hpp"

using namespace vground;

namespace {

GenerationRequest fine_request(const FrameGrid& grid, const std::string& query) {
  GenerationRequest request;
  request.sequence = build_fine_sequence(grid, {0, grid.size()}, query, 64);
  return request;
}

GenerationRequest coarse_request(const FrameGrid& grid, int segment_length,
                                 const std::string& query) {
  GenerationRequest request;
  request.sequence =
      build_coarse_sequence(grid, {0, grid.size()}, segment_length, query, 16).sequence;
  return request;
}

}  // namespace

TEST_CASE("oracle answers fine requests with the rendered truth") {
  const auto grid = make_grid(10.0, 2.0);
  const auto result = oracle_complete(fine_request(grid, "q"), {2.0, 8.5});
  CHECK(result.text == "From 2.0 seconds to 8.5 seconds");
}

TEST_CASE("oracle names every overlapped segment in coarse requests") {
  // 128 frames at 2 fps, 32-frame segments: heads every 16 s.
  const auto grid = make_grid(63.5, 2.0);
  const auto result = oracle_complete(coarse_request(grid, 32, "q"), {20.0, 40.0});
  CHECK(result.text == "16.0 seconds, 32.0 seconds");
}

TEST_CASE("oracle offset shifts both endpoints before snapping") {
  const auto grid = make_grid(20.0, 2.0);
  const auto result =
      oracle_complete(fine_request(grid, "q"), {2.0, 8.0}, OracleNoise{1.0});
  CHECK(result.text == "From 3.0 seconds to 9.0 seconds");
}

TEST_CASE("oracle clamps to the presented range") {
  const auto grid = make_grid(10.0, 2.0);
  GenerationRequest request;
  request.sequence = build_fine_sequence(grid, {4, 12}, "q", 64);  // 2.0 .. 5.5 s

  SUBCASE("partial overlap returns the overlapping portion") {
    const auto result = oracle_complete(request, {1.0, 3.0});
    CHECK(result.text == "From 2.0 seconds to 3.0 seconds");
  }
  SUBCASE("zero overlap degenerates to the first timestamp") {
    const auto result = oracle_complete(request, {8.0, 9.0});
    CHECK(result.text == "From 2.0 seconds to 2.0 seconds");
  }
}

TEST_CASE("oracle is a pure function of request, truth, and noise") {
  const auto grid = make_grid(30.0, 2.0);
  const auto request = fine_request(grid, "same");
  const auto a = oracle_complete(request, {4.0, 11.5});
  const auto b = oracle_complete(request, {4.0, 11.5});
  CHECK(a.text == b.text);
}

TEST_CASE("oracle backend resolves the truth by query text") {
  const auto grid = make_grid(10.0, 2.0);
  OracleBackend backend({{"q1", {1.0, 3.0}}, {"q2", {4.0, 6.0}}});
  CHECK(backend.complete(fine_request(grid, "q2")).text ==
        "From 4.0 seconds to 6.0 seconds");
  CHECK_THROWS_AS(backend.complete(fine_request(grid, "unknown")),
                  std::invalid_argument);
}

TEST_CASE("fixture backend replays byte-for-byte and never fabricates") {
  const auto grid = make_grid(10.0, 2.0);
  const auto request = fine_request(grid, "q");

  FixtureBackend backend;
  backend.add(canonical_prompt(request), "From 1.0 seconds to 2.0 seconds\n");
  CHECK(backend.complete(request).text == "From 1.0 seconds to 2.0 seconds\n");

  const auto other = fine_request(grid, "different");
  CHECK_THROWS_AS(backend.complete(other), BackendError);
  try {
    backend.complete(other);
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::MissingFixture);
    CHECK_FALSE(e.retryable());
  }
}

TEST_CASE("fixture files round-trip through save and load") {
  const auto grid = make_grid(5.0, 2.0);
  const auto request = fine_request(grid, "q");
  const auto path =
      (std::filesystem::temp_directory_path() / "vground_fixture_test.json").string();

  FixtureBackend original;
  original.add(canonical_prompt(request), "reply text");
  original.save_file(path);
  auto reloaded = FixtureBackend::load_file(path);
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.complete(request).text == "reply text");
  std::filesystem::remove(path);
}

TEST_CASE("recording backend captures replayable fixtures") {
  const auto grid = make_grid(8.0, 2.0);
  OracleBackend oracle({{"q", {1.0, 2.0}}});
  FixtureBackend sink;
  RecordingBackend recorder(oracle, sink);

  const auto request = fine_request(grid, "q");
  const auto live = recorder.complete(request);
  CHECK(sink.complete(request).text == live.text);
}

TEST_CASE("canonical prompt covers system, interleaving, and task text") {
  const auto grid = make_grid(1.0, 2.0);
  const auto request = fine_request(grid, "the query");
  const auto prompt = canonical_prompt(request);
  CHECK(prompt.find("You are a helpful assistant.") == 0);
  CHECK(prompt.find("timestamp: 0.5 seconds") != std::string::npos);
  CHECK(prompt.find("<frame:1>") != std::string::npos);
  CHECK(prompt.find("Query: the query") != std::string::npos);
}
