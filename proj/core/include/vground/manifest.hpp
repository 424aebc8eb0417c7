#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vground/orchestrator.hpp"
#include "vground/timeline.hpp"
#include "vground/vqa.hpp"

namespace vground {

struct VideoEntry {
  std::string id;
  double duration = 0.0;
  double fps = 2.0;
  std::optional<std::string> media;       // path to a media file, ingest decodes it
  std::optional<std::string> frames_dir;  // pre-extracted frames
  // Set on perturbed manifests: this video is a virtual crop of source_id.
  std::optional<std::string> source_id;
  std::optional<double> crop_start;
};

struct QueryEntry {
  std::string id;
  std::string video_id;
  std::string text;
  std::vector<Moment> gt;
  std::optional<std::vector<std::size_t>> gt_segments;
};

struct BenchmarkManifest {
  int version = 1;
  std::vector<VideoEntry> videos;
  std::vector<QueryEntry> queries;
  std::filesystem::path base_dir;  // directory of the manifest file

  const VideoEntry& video(const std::string& id) const;
  void validate() const;
};

struct QAManifest {
  int version = 1;
  std::vector<VideoEntry> videos;
  std::vector<QAItem> items;
  std::filesystem::path base_dir;

  const VideoEntry& video(const std::string& id) const;
};

/// Rejects unknown schema names or versions instead of guessing.
BenchmarkManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const BenchmarkManifest& manifest, const std::filesystem::path& path);

QAManifest load_qa_manifest(const std::filesystem::path& path);

struct PredictionRecord {
  std::string query_id;
  std::vector<Moment> moments;
  std::vector<StageTrace> stage_trace;
  bool fallback_used = false;
};

nlohmann::json prediction_to_json(const PredictionRecord& record);
PredictionRecord prediction_from_json(const nlohmann::json& doc);

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

/// Streaming writer so long runs can resume: one prediction per line after a
/// schema header.
class PredictionWriter {
 public:
  /// Opens for append when the file already has a valid header.
  explicit PredictionWriter(const std::filesystem::path& path);

  void write(const PredictionRecord& record);
  const std::vector<std::string>& existing_ids() const { return existing_ids_; }

 private:
  std::filesystem::path path_;
  std::vector<std::string> existing_ids_;
};

}  // namespace vground
