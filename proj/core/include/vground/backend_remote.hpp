#pragma once

#include <memory>
#include <string>

#include "vground/backend.hpp"

namespace vground {

struct RemoteConfig {
  std::string url;      // e.g. http://127.0.0.1:8089/v1/complete
  std::string api_key;  // optional; sent as "Authorization: Bearer <key>"
  std::string model = "default";
  int max_retries = 2;        // transport errors only
  int backoff_base_ms = 200;  // doubles per retry
  int timeout_ms = 60000;
  int max_connections = 4;    // concurrent in-flight requests
  bool inline_images = true;  // base64-encode file sources into the body

  /// Reads GROUND_BACKEND_URL and GROUND_BACKEND_KEY.
  static RemoteConfig from_env();
};

/// Chat-style JSON client. The request body is
///   {model, messages:[{role, content:[{type:"text",text}|{type:"image",data}]}],
///    max_tokens, temperature, logprobs}
/// and the expected reply is {text, logprobs?}. The interleaved text parts are
/// transmitted exactly as rendered; the client never rewrites them.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ~RemoteBackend() override;

  GenerationResult complete(const GenerationRequest& request) override;
  std::string name() const override { return "remote"; }

  /// Exposed for tests: the exact JSON body complete() would post.
  std::string request_body(const GenerationRequest& request) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vground
