#include "vground/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <nlohmann/json.hpp>

#include "vground/datagen.hpp"
#include "vground/ingest.hpp"
#include "vground/manifest.hpp"
#include "vground/metrics.hpp"
#include "vground/perturb.hpp"
#include "vground/timeline_svg.hpp"
#include "vground/vqa.hpp"

namespace vground {

namespace fs = std::filesystem;

namespace {

void from_json_into(const nlohmann::json& doc, ScalingConfig& scaling) {
  scaling.total_token_budget = doc.value("total_token_budget", scaling.total_token_budget);
  scaling.short_threshold = doc.value("short_threshold", scaling.short_threshold);
  scaling.long_threshold = doc.value("long_threshold", scaling.long_threshold);
  scaling.patch_size = doc.value("patch_size", scaling.patch_size);
  scaling.fps = doc.value("fps", scaling.fps);
}

std::unique_ptr<Backend> make_backend(const BackendChoice& choice,
                                      const EngineConfig& engine,
                                      const BenchmarkManifest* manifest) {
  if (choice.kind == "oracle") {
    if (manifest == nullptr) {
      throw std::invalid_argument("oracle backend needs a grounding manifest");
    }
    std::map<std::string, Moment> truths;
    for (const auto& query : manifest->queries) {
      if (query.gt.empty()) {
        throw std::invalid_argument("oracle backend: query '" + query.id +
                                    "' has no ground truth");
      }
      truths[query.text] = query.gt.front();
    }
    return std::make_unique<OracleBackend>(std::move(truths),
                                           OracleNoise{choice.oracle_offset});
  }
  if (choice.kind == "fixture") {
    if (!choice.fixtures) {
      throw std::invalid_argument("fixture backend needs --fixtures");
    }
    return std::make_unique<FixtureBackend>(
        FixtureBackend::load_file(choice.fixtures->string()));
  }
  if (choice.kind == "remote") {
    return std::make_unique<RemoteBackend>(engine.remote);
  }
  throw std::invalid_argument("unknown backend kind: " + choice.kind);
}

fs::path resolve_cache_dir(const std::optional<fs::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GROUND_CACHE")) return env;
  return {};
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write: " + path.string());
  }
  out << doc.dump(2) << '\n';
}

}  // namespace

EngineConfig EngineConfig::load(const std::optional<fs::path>& path) {
  EngineConfig config;
  if (!path) return config;
  std::ifstream in(*path);
  if (!in) {
    throw std::runtime_error("cannot open config: " + path->string());
  }
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.contains("scaling")) {
    from_json_into(doc["scaling"], config.grounding.scaling);
  }
  auto& grounding = config.grounding;
  grounding.segment_length = doc.value("segment_length", grounding.segment_length);
  grounding.max_stages = doc.value("max_stages", grounding.max_stages);
  grounding.max_kept_segments =
      doc.value("max_kept_segments", grounding.max_kept_segments);
  grounding.max_new_tokens = doc.value("max_new_tokens", grounding.max_new_tokens);
  grounding.parallel_clips = doc.value("parallel_clips", grounding.parallel_clips);
  if (doc.contains("templates")) {
    const auto& templates = doc["templates"];
    grounding.templates.system = templates.value("system", grounding.templates.system);
    grounding.templates.fine_task =
        templates.value("fine_task", grounding.templates.fine_task);
    grounding.templates.coarse_task =
        templates.value("coarse_task", grounding.templates.coarse_task);
  }
  if (doc.contains("remote")) {
    const auto& remote = doc["remote"];
    config.remote.url = remote.value("url", config.remote.url);
    config.remote.api_key = remote.value("api_key", config.remote.api_key);
    config.remote.model = remote.value("model", config.remote.model);
    config.remote.max_retries = remote.value("max_retries", config.remote.max_retries);
    config.remote.backoff_base_ms =
        remote.value("backoff_base_ms", config.remote.backoff_base_ms);
    config.remote.timeout_ms = remote.value("timeout_ms", config.remote.timeout_ms);
    config.remote.max_connections =
        remote.value("max_connections", config.remote.max_connections);
    config.remote.inline_images =
        remote.value("inline_images", config.remote.inline_images);
  }
  config.n_rep = doc.value("n_rep", config.n_rep);
  config.grounding.validate();
  return config;
}

int cmd_ingest(const IngestOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  IngestConfig config;
  config.cache_dir = options.cache_dir;
  if (options.decoder) config.decoder_command = *options.decoder;
  const auto report = ingest(manifest, config);
  std::cout << nlohmann::json{{"videos", report.videos.size()},
                              {"decoder_invocations", report.decoder_invocations}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_ground(const GroundOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  const auto engine = EngineConfig::load(options.config);
  auto backend = make_backend(options.backend, engine, &manifest);

  FixtureBackend recorder_sink;
  std::unique_ptr<RecordingBackend> recorder;
  Backend* active = backend.get();
  if (options.record_fixtures) {
    recorder = std::make_unique<RecordingBackend>(*backend, recorder_sink);
    active = recorder.get();
  }

  const fs::path cache_dir = resolve_cache_dir(options.cache_dir);
  PredictionWriter writer(options.out);
  std::set<std::string> done(writer.existing_ids().begin(),
                             writer.existing_ids().end());

  for (const auto& query : manifest.queries) {
    if (done.count(query.id)) continue;
    const auto& video = manifest.video(query.video_id);
    const FrameGrid grid = make_grid(video.duration, video.fps);

    GroundingConfig grounding = engine.grounding;
    grounding.scaling.fps = video.fps;
    const auto frames = cached_frames(manifest, video, cache_dir);
    if (!frames.empty()) {
      grounding.frame_source = [frames, id = video.id](std::size_t index) {
        return index < frames.size() ? frames[index].string()
                                     : "video://" + id + "#" + std::to_string(index);
      };
    } else {
      grounding.frame_source = [id = video.id](std::size_t index) {
        return "video://" + id + "#" + std::to_string(index);
      };
    }

    const auto result = ground(grid, query.text, grounding, *active);
    writer.write({query.id, result.moments, result.stage_trace, result.fallback_used});
  }

  if (options.record_fixtures) {
    recorder_sink.save_file(options.record_fixtures->string());
  }
  return 0;
}

int cmd_eval(const EvalOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  const auto predictions = load_predictions(options.predictions);

  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& record : predictions) by_id[record.query_id] = &record;

  std::vector<EvalRecord> records;
  for (const auto& query : manifest.queries) {
    EvalRecord record;
    record.query_id = query.id;
    record.ground_truth = query.gt;
    if (const auto it = by_id.find(query.id); it != by_id.end()) {
      record.predicted = it->second->moments;
      // Last coarse trace holds the surviving retrieval; use it for the
      // segment-retrieval metric when the manifest annotates gt segments.
      for (const auto& stage : it->second->stage_trace) {
        if (stage.kind == StageKind::Coarse) {
          record.retrieved_segments = stage.retrieved_segments;
        }
      }
    }
    record.gt_segments = query.gt_segments;
    if (!record.gt_segments) record.retrieved_segments.reset();
    if (record.ground_truth.empty()) {
      throw std::runtime_error("eval: query '" + query.id + "' has no ground truth");
    }
    records.push_back(std::move(record));
  }

  const auto report = evaluate(records, options.thresholds);
  write_json_file(options.out, report.to_json());
  if (options.csv) {
    std::ofstream csv(*options.csv);
    write_records_csv(csv, records, options.thresholds);
  }
  std::cout << report.to_json().dump() << '\n';
  return 0;
}

int cmd_perturb_shift(const PerturbShiftOptions& options) {
  const auto manifest = load_manifest(options.manifest);

  BenchmarkManifest shifted;
  std::uint64_t draw = 0;
  for (const auto& query : manifest.queries) {
    if (query.gt.empty()) continue;
    const auto& video = manifest.video(query.video_id);
    const Moment event = query.gt.front();
    const double crop_len = options.crop_len
                                ? std::max(*options.crop_len, event.length())
                                : default_crop_len(event, video.duration);
    for (int repeat = 0; repeat < options.repeats; ++repeat) {
      const auto sample = time_shift_sample(video.id, video.duration, event, crop_len,
                                            options.seed + draw++);
      const std::string suffix = "#shift" + std::to_string(repeat);
      VideoEntry crop_video;
      crop_video.id = video.id + "/" + query.id + suffix;
      crop_video.duration = sample.crop.length();
      crop_video.fps = video.fps;
      crop_video.source_id = video.id;
      crop_video.crop_start = sample.crop.start;
      shifted.videos.push_back(crop_video);

      QueryEntry shifted_query;
      shifted_query.id = query.id + suffix;
      shifted_query.video_id = crop_video.id;
      shifted_query.text = query.text;
      shifted_query.gt = {sample.event_in_crop};
      shifted.queries.push_back(std::move(shifted_query));
    }
  }
  save_manifest(shifted, options.out);
  std::cout << nlohmann::json{{"videos", shifted.videos.size()},
                              {"queries", shifted.queries.size()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_perturb_decompose(const PerturbDecomposeOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  const auto engine = EngineConfig::load(options.config);
  auto backend = make_backend(options.backend, engine, &manifest);

  std::ofstream out(options.out);
  if (!out) {
    throw std::runtime_error("cannot write: " + options.out.string());
  }
  out << nlohmann::json{{"kind", "header"},
                        {"schema", "vground/decompositions"},
                        {"version", 1}}
             .dump()
      << '\n';
  for (const auto& query : manifest.queries) {
    const auto decomposition = decompose_query(query.text, *backend);
    out << nlohmann::json{{"kind", "decomposition"},
                          {"query_id", query.id},
                          {"questions", decomposition.questions},
                          {"warning", decomposition.warning}}
               .dump()
        << '\n';
  }
  return 0;
}

int cmd_pack(const PackOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  const auto engine = EngineConfig::load(options.config);

  std::ofstream out(options.out);
  if (!out) {
    throw std::runtime_error("cannot write: " + options.out.string());
  }
  out << nlohmann::json{{"kind", "header"}, {"schema", "vground/packed"}, {"version", 1}}
             .dump()
      << '\n';

  // Budget-token accounting: the video contributes its planned visual
  // tokens, query/answer sides contribute whitespace-token counts.
  const auto text_tokens = [](const std::string& text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
      const bool space = c == ' ' || c == '\n' || c == '\t';
      count += !space && !in_word;
      in_word = !space;
    }
    return std::max<std::size_t>(count, 1);
  };

  for (const auto& video : manifest.videos) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& query : manifest.queries) {
      if (query.video_id != video.id || query.gt.empty()) continue;
      const auto answer = render_answer(query.gt, decimals_for_fps(video.fps));
      pairs.emplace_back(text_tokens(query.text), text_tokens(answer));
    }
    if (pairs.empty()) continue;
    const FrameGrid grid = make_grid(video.duration, video.fps);
    ScalingConfig scaling = engine.grounding.scaling;
    scaling.fps = video.fps;
    const auto video_plan = plan(grid.size(), scaling);
    std::size_t video_tokens = 0;
    for (std::size_t clip = 0; clip < video_plan.clips.size(); ++clip) {
      video_tokens += video_plan.clips[clip].size() *
                      static_cast<std::size_t>(video_plan.clip_tokens[clip]);
    }
    auto batch = pack_video_centric(video_tokens, pairs);
    auto doc = batch.to_json();
    doc["kind"] = "packed_batch";
    doc["video_id"] = video.id;
    out << doc.dump() << '\n';
  }
  return 0;
}

int cmd_datagen(const DatagenOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  const auto engine = EngineConfig::load(options.config);
  const int n_rep = options.n_rep.value_or(engine.n_rep);

  DatagenConfig config;
  config.scaling = engine.grounding.scaling;
  config.segment_length = engine.grounding.segment_length;

  std::vector<TrainingSample> samples;
  std::uint64_t video_index = 0;
  for (const auto& video : manifest.videos) {
    std::vector<std::pair<std::string, Moment>> annotations;
    for (const auto& query : manifest.queries) {
      if (query.video_id == video.id && !query.gt.empty()) {
        annotations.emplace_back(query.text, query.gt.front());
      }
    }
    ++video_index;
    if (annotations.empty()) continue;
    const FrameGrid grid = make_grid(video.duration, video.fps);
    DatagenConfig video_config = config;
    video_config.scaling.fps = video.fps;
    auto video_samples = build_training_samples(video.id, grid, annotations,
                                                video_config, options.seed + video_index);
    samples.insert(samples.end(), video_samples.begin(), video_samples.end());
  }
  samples = replicate_long(samples, n_rep);

  std::ofstream out(options.out);
  if (!out) {
    throw std::runtime_error("cannot write: " + options.out.string());
  }
  out << nlohmann::json{{"kind", "header"}, {"schema", "vground/samples"}, {"version", 1}}
             .dump()
      << '\n';
  for (const auto& sample : samples) {
    auto doc = sample.to_json();
    doc["kind"] = "sample";
    out << doc.dump() << '\n';
  }
  return 0;
}

int cmd_vqa(const VqaOptions& options) {
  const auto manifest = load_qa_manifest(options.manifest);
  const auto engine = EngineConfig::load(options.config);
  BenchmarkManifest empty;
  auto backend = make_backend(options.backend, engine, &empty);

  FixtureBackend recorder_sink;
  std::unique_ptr<RecordingBackend> recorder;
  Backend* active = backend.get();
  if (options.record_fixtures) {
    recorder = std::make_unique<RecordingBackend>(*backend, recorder_sink);
    active = recorder.get();
  }

  std::map<std::string, std::vector<Moment>> grounding;
  if (options.grounding) {
    for (const auto& record : load_predictions(*options.grounding)) {
      grounding[record.query_id] = record.moments;
    }
  }

  // Per-item results stream to disk so interrupted runs resume.
  std::map<std::string, nlohmann::json> done;
  if (fs::exists(options.out)) {
    std::ifstream in(options.out);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto doc = nlohmann::json::parse(line);
      done[doc.at("id").get<std::string>()] = doc;
    }
  } else {
    std::ofstream out(options.out);
    out << nlohmann::json{{"kind", "header"},
                          {"schema", "vground/qa_results"},
                          {"version", 1}}
               .dump()
        << '\n';
  }

  std::size_t correct = 0;
  std::size_t unanswered = 0;
  std::vector<EvalRecord> grounded;
  for (const auto& item : manifest.items) {
    nlohmann::json result;
    if (const auto it = done.find(item.id); it != done.end()) {
      result = it->second;
    } else {
      const auto grounding_it = grounding.find(item.id);
      const std::vector<Moment> moments = grounding_it != grounding.end()
                                              ? grounding_it->second
                                              : std::vector<Moment>{};
      const Moment top1 =
          moments.empty() ? Moment{0.0, item.duration} : moments.front();
      const Moment window = extend_window(top1, item.duration);
      const FrameGrid grid = make_grid(item.duration, manifest.video(item.video_id).fps);
      const auto qa = answer(item, window, grid, *active);

      result = {{"kind", "qa_result"},
                {"id", item.id},
                {"window", {{"start", window.start}, {"end", window.end}}},
                {"label", qa.label ? std::string(1, *qa.label) : ""},
                {"correct", qa.label && *qa.label == item.correct_label},
                {"raw_text", qa.raw_text}};
      std::ofstream out(options.out, std::ios::app);
      out << result.dump() << '\n';
    }

    correct += result.value("correct", false) ? 1 : 0;
    unanswered += result.value("label", "").empty() ? 1 : 0;
    if (item.gt_moment) {
      const auto grounding_it = grounding.find(item.id);
      grounded.push_back(EvalRecord{item.id,
                                    grounding_it != grounding.end()
                                        ? grounding_it->second
                                        : std::vector<Moment>{},
                                    {*item.gt_moment},
                                    {},
                                    {}});
    }
  }

  nlohmann::json summary{
      {"accuracy",
       static_cast<double>(correct) / static_cast<double>(manifest.items.size())},
      {"unanswered", unanswered},
      {"n", manifest.items.size()}};
  if (!grounded.empty()) {
    const double thresholds[] = {0.3, 0.5};
    summary["grounding"] = evaluate(grounded, thresholds).to_json();
  }
  write_json_file(options.report, summary);
  std::cout << summary.dump() << '\n';

  if (options.record_fixtures) {
    recorder_sink.save_file(options.record_fixtures->string());
  }
  return 0;
}

int cmd_export_timeline(const ExportTimelineOptions& options) {
  const auto manifest = load_manifest(options.manifest);
  const auto predictions = load_predictions(options.predictions);
  fs::create_directories(options.out_dir);

  std::map<std::string, const QueryEntry*> queries;
  for (const auto& query : manifest.queries) queries[query.id] = &query;

  std::size_t written = 0;
  for (const auto& record : predictions) {
    const auto it = queries.find(record.query_id);
    if (it == queries.end()) continue;
    const auto& query = *it->second;
    const auto& video = manifest.video(query.video_id);
    std::string name = record.query_id;
    for (auto& c : name) {
      if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    std::ofstream out(options.out_dir / (name + ".svg"));
    out << render_timeline_svg(query, video, record);
    ++written;
  }
  std::cout << nlohmann::json{{"timelines", written}}.dump() << '\n';
  return 0;
}

}  // namespace vground
