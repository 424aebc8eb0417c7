#pragma once

#include <functional>
#include <random>
#include <string>

#include "vground/backend.hpp"

namespace vground::test {

/// Portable uniform double; mirrors the draw the library itself uses.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

/// Test backend scripted by a lambda.
class LambdaBackend : public Backend {
 public:
  using Fn = std::function<GenerationResult(const GenerationRequest&)>;

  explicit LambdaBackend(Fn fn) : fn_(std::move(fn)) {}

  GenerationResult complete(const GenerationRequest& request) override {
    return fn_(request);
  }
  std::string name() const override { return "lambda"; }

 private:
  Fn fn_;
};

}  // namespace vground::test
