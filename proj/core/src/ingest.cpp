#include "vground/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace vground {

namespace fs = std::filesystem;

namespace {

std::string fnv1a_hex(std::istream& in) {
  std::uint64_t hash = 1469598103934665603ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

std::string content_hash(const fs::path& media, double fps) {
  std::ifstream in(media, std::ios::binary);
  if (!in) {
    throw std::runtime_error("unreadable media file: " + media.string());
  }
  std::string hash = fnv1a_hex(in);
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, ":%.6f", fps);
  return hash + suffix;
}

std::string substitute(std::string tmpl, const std::string& key,
                       const std::string& value) {
  for (auto pos = tmpl.find(key); pos != std::string::npos;
       pos = tmpl.find(key, pos + value.size())) {
    tmpl.replace(pos, key.size(), value);
  }
  return tmpl;
}

std::vector<fs::path> frame_files(const fs::path& dir) {
  std::vector<fs::path> frames;
  if (!fs::is_directory(dir)) return frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.rfind("frame_", 0) == 0) frames.push_back(entry.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

}  // namespace

std::vector<fs::path> cached_frames(const BenchmarkManifest& manifest,
                                    const VideoEntry& video,
                                    const fs::path& cache_dir) {
  if (video.frames_dir) {
    return frame_files(manifest.base_dir / *video.frames_dir);
  }
  if (video.media && !cache_dir.empty()) {
    return frame_files(cache_dir / video.id);
  }
  return {};
}

IngestReport ingest(const BenchmarkManifest& manifest, const IngestConfig& config) {
  IngestReport report;
  for (const auto& video : manifest.videos) {
    const std::size_t expected = make_grid(video.duration, video.fps).size();

    if (video.frames_dir) {
      const fs::path dir = manifest.base_dir / *video.frames_dir;
      auto frames = frame_files(dir);
      if (frames.size() != expected) {
        throw std::runtime_error("video '" + video.id + "': frame directory holds " +
                                 std::to_string(frames.size()) + " frames, expected " +
                                 std::to_string(expected));
      }
      report.videos.push_back({video.id, dir, std::move(frames), false});
      continue;
    }
    if (!video.media) {
      continue;  // virtual video (synthetic or perturbed crop)
    }

    const fs::path media = manifest.base_dir / *video.media;
    if (!fs::exists(media)) {
      throw std::runtime_error("video '" + video.id + "': missing media file " +
                               media.string());
    }
    const fs::path out_dir = config.cache_dir / video.id;
    const fs::path stamp_path = out_dir / ".ingest.json";
    const std::string hash = content_hash(media, video.fps);

    bool fresh = false;
    if (fs::exists(stamp_path)) {
      std::ifstream stamp_in(stamp_path);
      nlohmann::json stamp = nlohmann::json::parse(stamp_in, nullptr, false);
      fresh = !stamp.is_discarded() && stamp.value("hash", "") == hash;
    }

    if (!fresh) {
      fs::create_directories(out_dir);
      for (const auto& stale : frame_files(out_dir)) fs::remove(stale);
      char fps_text[32];
      std::snprintf(fps_text, sizeof fps_text, "%g", video.fps);
      std::string command = config.decoder_command;
      command = substitute(command, "{input}", media.string());
      command = substitute(command, "{output}", out_dir.string());
      command = substitute(command, "{fps}", fps_text);
      ++report.decoder_invocations;
      if (std::system(command.c_str()) != 0) {
        throw std::runtime_error("video '" + video.id + "': decoder failed: " + command);
      }
    }

    auto frames = frame_files(out_dir);
    if (frames.size() != expected) {
      throw std::runtime_error("video '" + video.id + "': decoder produced " +
                               std::to_string(frames.size()) + " frames, expected " +
                               std::to_string(expected));
    }
    if (!fresh) {
      std::ofstream stamp_out(stamp_path);
      stamp_out << nlohmann::json{{"hash", hash}, {"frames", frames.size()}}.dump()
                << '\n';
    }
    report.videos.push_back({video.id, out_dir, std::move(frames), !fresh});
  }
  return report;
}

}  // namespace vground
