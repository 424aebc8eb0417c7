#include "vground/manifest.hpp"

#include <fstream>

namespace vground {

namespace {

constexpr int kManifestVersion = 1;
constexpr int kPredictionsVersion = 1;

nlohmann::json read_header(std::istream& in, const std::string& schema,
                           const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty file, expected a schema header");
  }
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("kind", "") != "header" || header.value("schema", "") != schema) {
    throw std::runtime_error(path + ": not a " + schema + " file");
  }
  return header;
}

void check_version(const nlohmann::json& header, int supported,
                   const std::string& path) {
  const int version = header.value("version", -1);
  if (version != supported) {
    throw std::runtime_error(path + ": unsupported schema version " +
                             std::to_string(version));
  }
}

Moment moment_from_json(const nlohmann::json& doc) {
  return make_moment(doc.at("start").get<double>(), doc.at("end").get<double>());
}

nlohmann::json moment_to_json(const Moment& m) {
  return {{"start", m.start}, {"end", m.end}};
}

VideoEntry video_from_json(const nlohmann::json& doc) {
  VideoEntry video;
  video.id = doc.at("id").get<std::string>();
  video.duration = doc.at("duration").get<double>();
  video.fps = doc.value("fps", 2.0);
  if (doc.contains("media")) video.media = doc["media"].get<std::string>();
  if (doc.contains("frames_dir")) video.frames_dir = doc["frames_dir"].get<std::string>();
  if (doc.contains("source_id")) video.source_id = doc["source_id"].get<std::string>();
  if (doc.contains("crop_start")) video.crop_start = doc["crop_start"].get<double>();
  return video;
}

nlohmann::json video_to_json(const VideoEntry& video) {
  nlohmann::json doc{{"kind", "video"},
                     {"id", video.id},
                     {"duration", video.duration},
                     {"fps", video.fps}};
  if (video.media) doc["media"] = *video.media;
  if (video.frames_dir) doc["frames_dir"] = *video.frames_dir;
  if (video.source_id) doc["source_id"] = *video.source_id;
  if (video.crop_start) doc["crop_start"] = *video.crop_start;
  return doc;
}

template <typename Manifest>
const VideoEntry& find_video(const Manifest& manifest, const std::string& id) {
  for (const auto& video : manifest.videos) {
    if (video.id == id) return video;
  }
  throw std::runtime_error("manifest: unknown video id '" + id + "'");
}

}  // namespace

const VideoEntry& BenchmarkManifest::video(const std::string& id) const {
  return find_video(*this, id);
}

const VideoEntry& QAManifest::video(const std::string& id) const {
  return find_video(*this, id);
}

void BenchmarkManifest::validate() const {
  for (const auto& v : videos) {
    if (!(v.duration > 0.0)) {
      throw std::runtime_error("manifest: video '" + v.id + "' has no duration");
    }
  }
  for (const auto& q : queries) {
    const auto& v = video(q.video_id);
    for (const auto& m : q.gt) {
      if (m.start < 0.0 || m.end > v.duration + 1e-9) {
        throw std::runtime_error("manifest: query '" + q.id +
                                 "' has a moment outside its video");
      }
    }
  }
}

BenchmarkManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + path.string());
  }
  const auto header = read_header(in, "vground/manifest", path.string());
  check_version(header, kManifestVersion, path.string());

  BenchmarkManifest manifest;
  manifest.base_dir = path.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line);
    const std::string kind = doc.value("kind", "");
    if (kind == "video") {
      manifest.videos.push_back(video_from_json(doc));
    } else if (kind == "query") {
      QueryEntry query;
      query.id = doc.at("id").get<std::string>();
      query.video_id = doc.at("video_id").get<std::string>();
      query.text = doc.at("text").get<std::string>();
      for (const auto& m : doc.value("gt", nlohmann::json::array())) {
        query.gt.push_back(moment_from_json(m));
      }
      if (doc.contains("gt_segments")) {
        query.gt_segments = doc["gt_segments"].get<std::vector<std::size_t>>();
      }
      manifest.queries.push_back(std::move(query));
    } else {
      throw std::runtime_error(path.string() + ": unknown record kind '" + kind + "'");
    }
  }
  manifest.validate();
  return manifest;
}

void save_manifest(const BenchmarkManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write manifest: " + path.string());
  }
  out << nlohmann::json{{"kind", "header"},
                        {"schema", "vground/manifest"},
                        {"version", kManifestVersion}}
             .dump()
      << '\n';
  for (const auto& video : manifest.videos) {
    out << video_to_json(video).dump() << '\n';
  }
  for (const auto& query : manifest.queries) {
    nlohmann::json doc{{"kind", "query"},
                       {"id", query.id},
                       {"video_id", query.video_id},
                       {"text", query.text}};
    nlohmann::json gt = nlohmann::json::array();
    for (const auto& m : query.gt) gt.push_back(moment_to_json(m));
    doc["gt"] = std::move(gt);
    if (query.gt_segments) doc["gt_segments"] = *query.gt_segments;
    out << doc.dump() << '\n';
  }
}

QAManifest load_qa_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open QA manifest: " + path.string());
  }
  const auto header = read_header(in, "vground/vqa", path.string());
  check_version(header, kManifestVersion, path.string());

  QAManifest manifest;
  manifest.base_dir = path.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line);
    const std::string kind = doc.value("kind", "");
    if (kind == "video") {
      manifest.videos.push_back(video_from_json(doc));
    } else if (kind == "qa") {
      QAItem item;
      item.id = doc.at("id").get<std::string>();
      item.video_id = doc.at("video_id").get<std::string>();
      item.question = doc.at("question").get<std::string>();
      item.options = doc.at("options").get<std::vector<std::string>>();
      item.correct_label = doc.at("correct").get<std::string>().at(0);
      if (doc.contains("gt")) item.gt_moment = moment_from_json(doc["gt"]);
      manifest.items.push_back(std::move(item));
    } else {
      throw std::runtime_error(path.string() + ": unknown record kind '" + kind + "'");
    }
  }
  for (auto& item : manifest.items) {
    item.duration = manifest.video(item.video_id).duration;
    item.validate();
  }
  return manifest;
}

nlohmann::json prediction_to_json(const PredictionRecord& record) {
  nlohmann::json moments = nlohmann::json::array();
  for (const auto& m : record.moments) moments.push_back(moment_to_json(m));
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& stage : record.stage_trace) {
    trace.push_back({{"stage", stage.stage},
                     {"kind", stage.kind == StageKind::Coarse ? "coarse" : "fine"},
                     {"input_frames", stage.input_frames},
                     {"retrieved_segments", stage.retrieved_segments},
                     {"raw_text", stage.raw_text}});
  }
  return {{"kind", "prediction"},
          {"query_id", record.query_id},
          {"moments", std::move(moments)},
          {"stage_trace", std::move(trace)},
          {"fallback_used", record.fallback_used}};
}

PredictionRecord prediction_from_json(const nlohmann::json& doc) {
  PredictionRecord record;
  record.query_id = doc.at("query_id").get<std::string>();
  for (const auto& m : doc.at("moments")) {
    record.moments.push_back(moment_from_json(m));
  }
  for (const auto& stage : doc.value("stage_trace", nlohmann::json::array())) {
    StageTrace trace;
    trace.stage = stage.at("stage").get<int>();
    trace.kind = stage.value("kind", "coarse") == "fine" ? StageKind::Fine
                                                         : StageKind::Coarse;
    trace.input_frames = stage.value("input_frames", std::size_t{0});
    trace.retrieved_segments =
        stage.value("retrieved_segments", std::vector<std::size_t>{});
    trace.raw_text = stage.value("raw_text", "");
    record.stage_trace.push_back(std::move(trace));
  }
  record.fallback_used = doc.value("fallback_used", false);
  return record;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open predictions: " + path.string());
  }
  const auto header = read_header(in, "vground/predictions", path.string());
  check_version(header, kPredictionsVersion, path.string());

  std::vector<PredictionRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(prediction_from_json(nlohmann::json::parse(line)));
  }
  return records;
}

PredictionWriter::PredictionWriter(const std::filesystem::path& path) : path_(path) {
  if (std::filesystem::exists(path)) {
    for (const auto& record : load_predictions(path)) {
      existing_ids_.push_back(record.query_id);
    }
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write predictions: " + path.string());
  }
  out << nlohmann::json{{"kind", "header"},
                        {"schema", "vground/predictions"},
                        {"version", kPredictionsVersion}}
             .dump()
      << '\n';
}

void PredictionWriter::write(const PredictionRecord& record) {
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    throw std::runtime_error("cannot append predictions: " + path_.string());
  }
  out << prediction_to_json(record).dump() << '\n';
}

}  // namespace vground
