#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vground/promptseq.hpp"
#include "vground/timeline.hpp"

namespace vground {

struct DecodingParams {
  int max_new_tokens = 256;
  double temperature = 0.0;  // 0 = greedy
  bool want_logprobs = false;
};

struct GenerationRequest {
  PromptSequence sequence;
  // Frame index -> image reference (file path, URI, or opaque handle).
  std::map<std::size_t, std::string> frame_sources;
  DecodingParams decoding;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

struct GenerationResult {
  std::string text;
  std::optional<std::vector<TokenLogprob>> logprobs;
  double latency_ms = 0.0;
};

enum class BackendErrorKind { Transport, Timeout, MalformedResponse, MissingFixture };

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, bool retryable, const std::string& what)
      : std::runtime_error(what), kind_(kind), retryable_(retryable) {}

  BackendErrorKind kind() const { return kind_; }
  bool retryable() const { return retryable_; }

 private:
  BackendErrorKind kind_;
  bool retryable_;
};

/// The generative-model boundary. Implementations must tolerate concurrent
/// complete() calls from independent grounding runs.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResult complete(const GenerationRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic text form of a request: system text, interleaved timestamp
/// lines with <frame:N> placeholders, then the task text. Fixture keys and
/// replay lookups are built from this.
std::string canonical_prompt(const GenerationRequest& request);

/// The interleaved user-turn text exactly as a remote client must transmit
/// it: every text part concatenated in order, frames excluded.
std::string interleaved_user_text(const PromptSequence& sequence);

struct OracleNoise {
  double offset_seconds = 0.0;  // added to both hidden-truth endpoints
};

/// Answers as a perfect (optionally offset) model would, reading the hidden
/// ground truth instead of pixels. Pure function of (request, truth, noise).
GenerationResult oracle_complete(const GenerationRequest& request, const Moment& truth,
                                 const OracleNoise& noise = {});

/// Backend that resolves the hidden truth by query text.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(std::map<std::string, Moment> truths, OracleNoise noise = {})
      : truths_(std::move(truths)), noise_(noise) {}

  GenerationResult complete(const GenerationRequest& request) override;
  std::string name() const override { return "oracle"; }

 private:
  std::map<std::string, Moment> truths_;
  OracleNoise noise_;
};

/// Replays recorded completions keyed by canonical prompt. Raises
/// missing-fixture instead of fabricating output. Read-only after load.
class FixtureBackend : public Backend {
 public:
  FixtureBackend() = default;

  static FixtureBackend load_file(const std::string& path);
  void save_file(const std::string& path) const;

  void add(const std::string& prompt_key, const std::string& text);
  std::size_t size() const { return fixtures_.size(); }

  GenerationResult complete(const GenerationRequest& request) override;
  std::string name() const override { return "fixture"; }

 private:
  std::map<std::string, std::string> fixtures_;
};

/// Wraps any backend and records every (canonical prompt, reply) pair so a
/// run can later be replayed through a FixtureBackend.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(Backend& inner, FixtureBackend& sink) : inner_(inner), sink_(sink) {}

  GenerationResult complete(const GenerationRequest& request) override;
  std::string name() const override { return inner_.name(); }

 private:
  Backend& inner_;
  FixtureBackend& sink_;
};

}  // namespace vground
