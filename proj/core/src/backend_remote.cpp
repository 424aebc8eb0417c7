#include "vground/backend_remote.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace vground {

namespace {

std::string base64_encode(const std::string& bytes) {
  static const char table[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
    i += 3;
  }
  if (i < bytes.size()) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    const bool two = i + 1 < bytes.size();
    if (two) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += two ? table[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

struct SplitUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("remote backend: URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  if (const char* url = std::getenv("GROUND_BACKEND_URL")) config.url = url;
  if (const char* key = std::getenv("GROUND_BACKEND_KEY")) config.api_key = key;
  return config;
}

struct RemoteBackend::Impl {
  RemoteConfig config;
  SplitUrl url;
  std::counting_semaphore<256> slots;

  explicit Impl(RemoteConfig cfg)
      : config(std::move(cfg)),
        url(split_url(config.url)),
        slots(std::max(1, config.max_connections)) {}

  nlohmann::json image_part(const std::string& source) const {
    std::string data = source;
    if (config.inline_images) {
      std::ifstream file(source, std::ios::binary);
      if (file) {
        std::ostringstream bytes;
        bytes << file.rdbuf();
        data = base64_encode(bytes.str());
      }
    }
    return {{"type", "image"}, {"data", data}};
  }

  nlohmann::json build_body(const GenerationRequest& request) const {
    const auto& seq = request.sequence;
    nlohmann::json content = nlohmann::json::array();
    // One text part per timestamp, one image part per frame, task text last.
    // The text parts joined in order must reproduce interleaved_user_text().
    for (const auto& element : seq.elements) {
      if (const auto* ts = std::get_if<TimestampText>(&element)) {
        content.push_back({{"type", "text"}, {"text", ts->text + "\n"}});
      } else {
        const auto& frame = std::get<FrameRef>(element);
        const auto source = request.frame_sources.find(frame.frame_index);
        if (source == request.frame_sources.end()) {
          throw std::invalid_argument("remote backend: frame " +
                                      std::to_string(frame.frame_index) +
                                      " has no source");
        }
        content.push_back(image_part(source->second));
      }
    }
    content.push_back({{"type", "text"}, {"text", seq.task_text}});

    nlohmann::json messages = nlohmann::json::array();
    messages.push_back(
        {{"role", "system"},
         {"content", nlohmann::json::array(
                         {{{"type", "text"}, {"text", seq.system_text}}})}});
    messages.push_back({{"role", "user"}, {"content", std::move(content)}});

    return {{"model", config.model},
            {"messages", std::move(messages)},
            {"max_tokens", request.decoding.max_new_tokens},
            {"temperature", request.decoding.temperature},
            {"logprobs", request.decoding.want_logprobs}};
  }

  GenerationResult parse_response(const std::string& body) const {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(BackendErrorKind::MalformedResponse, false,
                         std::string("remote backend: bad response JSON: ") + e.what());
    }
    if (!doc.contains("text") || !doc["text"].is_string()) {
      throw BackendError(BackendErrorKind::MalformedResponse, false,
                         "remote backend: response lacks a text field");
    }
    GenerationResult result;
    result.text = doc["text"].get<std::string>();
    if (doc.contains("logprobs") && doc["logprobs"].is_array()) {
      std::vector<TokenLogprob> logprobs;
      for (const auto& entry : doc["logprobs"]) {
        logprobs.push_back({entry.at("token").get<std::string>(),
                            entry.at("logprob").get<double>()});
      }
      result.logprobs = std::move(logprobs);
    }
    return result;
  }
};

RemoteBackend::RemoteBackend(RemoteConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  if (impl_->config.url.empty()) {
    throw std::invalid_argument("remote backend: no URL configured (GROUND_BACKEND_URL)");
  }
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::request_body(const GenerationRequest& request) const {
  return impl_->build_body(request).dump();
}

GenerationResult RemoteBackend::complete(const GenerationRequest& request) {
  const std::string body = impl_->build_body(request).dump();
  const auto& config = impl_->config;

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<256>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }

  const auto started = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.backoff_base_ms << (attempt - 1)));
    }
    httplib::Client client(impl_->url.host_port);
    client.set_connection_timeout(0, config.timeout_ms * 1000LL);
    client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);

    auto response = client.Post(impl_->url.path, headers, body, "application/json");
    if (!response) {
      last_error = "connection failed: " + httplib::to_string(response.error());
      continue;  // transport error, retryable
    }
    if (response->status >= 500) {
      last_error = "server error " + std::to_string(response->status);
      continue;  // retryable
    }
    if (response->status != 200) {
      throw BackendError(BackendErrorKind::Transport, false,
                         "remote backend: HTTP " + std::to_string(response->status));
    }
    auto result = impl_->parse_response(response->body);  // not retried on failure
    result.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return result;
  }
  throw BackendError(BackendErrorKind::Transport, true,
                     "remote backend: retries exhausted (" + last_error + ")");
}

}  // namespace vground
