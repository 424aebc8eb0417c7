#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vground/backend_remote.hpp"

using namespace vground;

namespace {

/// In-process stub inference server recording every request body.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/complete", [this](const httplib::Request& req,
                                        httplib::Response& res) {
      const int n = ++hits_;
      bodies_.push_back(req.body);
      if (n <= fail_first_) {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
        return;
      }
      res.set_content(reply_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  RemoteConfig config() const {
    RemoteConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete";
    cfg.model = "stub";
    cfg.backoff_base_ms = 1;
    cfg.inline_images = false;
    return cfg;
  }

  void fail_first(int n) { fail_first_ = n; }
  void set_reply(std::string reply) { reply_ = std::move(reply); }
  int hits() const { return hits_; }
  const std::vector<std::string>& bodies() const { return bodies_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int fail_first_ = 0;
  std::string reply_ = R"({"text":"From 1.0 seconds to 2.0 seconds"})";
  std::vector<std::string> bodies_;
};

GenerationRequest sample_request() {
  const auto grid = make_grid(2.0, 2.0);
  GenerationRequest request;
  request.sequence = build_fine_sequence(grid, {0, grid.size()}, "stub query", 64);
  for (const auto& element : request.sequence.elements) {
    if (const auto* frame = std::get_if<FrameRef>(&element)) {
      request.frame_sources[frame->frame_index] =
          "video://stub#" + std::to_string(frame->frame_index);
    }
  }
  return request;
}

}  // namespace

TEST_CASE("remote backend transmits the interleaved text byte-for-byte") {
  StubServer server;
  RemoteBackend backend(server.config());

  const auto request = sample_request();
  const auto result = backend.complete(request);
  CHECK(result.text == "From 1.0 seconds to 2.0 seconds");

  REQUIRE(server.bodies().size() == 1);
  const auto body = nlohmann::json::parse(server.bodies().front());
  CHECK(body.at("model") == "stub");
  CHECK(body.at("temperature") == 0.0);

  const auto& messages = body.at("messages");
  REQUIRE(messages.size() == 2);
  CHECK(messages[0].at("role") == "system");
  CHECK(messages[0].at("content")[0].at("text") == "You are a helpful assistant.");

  // Reassemble the wire text parts and compare with the engine's rendering.
  std::string wire_text;
  std::size_t images = 0;
  for (const auto& part : messages[1].at("content")) {
    if (part.at("type") == "text") {
      wire_text += part.at("text").get<std::string>();
    } else {
      CHECK(part.at("type") == "image");
      ++images;
    }
  }
  CHECK(wire_text == interleaved_user_text(request.sequence));
  CHECK(images == request.sequence.count_frames());
}

TEST_CASE("remote backend retries on 5xx and then succeeds") {
  StubServer server;
  server.fail_first(2);
  RemoteBackend backend(server.config());

  const auto result = backend.complete(sample_request());
  CHECK(result.text == "From 1.0 seconds to 2.0 seconds");
  CHECK(server.hits() == 3);  // 1 try + 2 retries
}

TEST_CASE("remote backend gives up after max_retries transport errors") {
  StubServer server;
  server.fail_first(1000);
  auto config = server.config();
  config.max_retries = 2;
  RemoteBackend backend(config);

  CHECK_THROWS_AS(backend.complete(sample_request()), BackendError);
  CHECK(server.hits() == 3);
  try {
    backend.complete(sample_request());
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::Transport);
    CHECK(e.retryable());
  }
}

TEST_CASE("malformed responses are never retried") {
  StubServer server;
  server.set_reply("this is not json");
  RemoteBackend backend(server.config());

  CHECK_THROWS_AS(backend.complete(sample_request()), BackendError);
  CHECK(server.hits() == 1);

  server.set_reply(R"({"missing":"text field"})");
  try {
    backend.complete(sample_request());
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::MalformedResponse);
    CHECK_FALSE(e.retryable());
  }
}

TEST_CASE("remote backend parses optional logprobs") {
  StubServer server;
  server.set_reply(
      R"({"text":"ok","logprobs":[{"token":"ok","logprob":-0.25}]})");
  RemoteBackend backend(server.config());

  const auto result = backend.complete(sample_request());
  REQUIRE(result.logprobs.has_value());
  REQUIRE(result.logprobs->size() == 1);
  CHECK(result.logprobs->front().token == "ok");
  CHECK(result.logprobs->front().logprob == doctest::Approx(-0.25));
}
