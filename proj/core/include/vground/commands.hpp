#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "vground/backend_remote.hpp"
#include "vground/orchestrator.hpp"

namespace vground {

/// Engine settings loaded from a JSON config file plus environment. Every
/// knob has the production default.
struct EngineConfig {
  GroundingConfig grounding;
  RemoteConfig remote = RemoteConfig::from_env();
  int n_rep = 4;  // long-sample replication factor

  static EngineConfig load(const std::optional<std::filesystem::path>& path);
};

struct BackendChoice {
  std::string kind = "oracle";  // oracle | fixture | remote
  std::optional<std::filesystem::path> fixtures;
  double oracle_offset = 0.0;
};

struct GroundOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  BackendChoice backend;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> record_fixtures;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  std::filesystem::path manifest;
  std::filesystem::path predictions;
  std::filesystem::path out;
  std::optional<std::filesystem::path> csv;
  std::vector<double> thresholds = {0.3, 0.5, 0.7};
};

struct IngestOptions {
  std::filesystem::path manifest;
  std::filesystem::path cache_dir;
  std::optional<std::string> decoder;
};

struct PerturbShiftOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::optional<double> crop_len;  // default: per-event heuristic
  int repeats = 1;
};

struct PerturbDecomposeOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  BackendChoice backend;
  std::optional<std::filesystem::path> config;
};

struct PackOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
};

struct DatagenOptions {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 0;
  std::optional<int> n_rep;
};

struct VqaOptions {
  std::filesystem::path manifest;  // vground/vqa schema
  std::filesystem::path out;       // per-item results, JSON lines
  std::filesystem::path report;    // summary JSON
  BackendChoice backend;
  std::optional<std::filesystem::path> grounding;  // reuse predictions
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> record_fixtures;
};

struct ExportTimelineOptions {
  std::filesystem::path manifest;
  std::filesystem::path predictions;
  std::filesystem::path out_dir;
};

int cmd_ingest(const IngestOptions& options);
int cmd_ground(const GroundOptions& options);
int cmd_eval(const EvalOptions& options);
int cmd_perturb_shift(const PerturbShiftOptions& options);
int cmd_perturb_decompose(const PerturbDecomposeOptions& options);
int cmd_pack(const PackOptions& options);
int cmd_datagen(const DatagenOptions& options);
int cmd_vqa(const VqaOptions& options);
int cmd_export_timeline(const ExportTimelineOptions& options);

}  // namespace vground
