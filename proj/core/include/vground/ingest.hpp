#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vground/manifest.hpp"

namespace vground {

struct IngestConfig {
  std::filesystem::path cache_dir;
  // External decoder template; {input}, {output} and {fps} are substituted.
  // {output} receives the per-video cache directory.
  std::string decoder_command =
      "ffmpeg -y -loglevel error -i {input} -vf fps={fps} {output}/frame_%06d.jpg";
};

struct IngestedVideo {
  std::string id;
  std::filesystem::path frames_dir;
  std::vector<std::filesystem::path> frames;  // sorted, one per grid timestamp
  bool decoded = false;                       // false when the cache was reused
};

struct IngestReport {
  std::vector<IngestedVideo> videos;
  std::size_t decoder_invocations = 0;
};

/// Resolves every video with media to numbered frame files in the cache,
/// validating frame counts against the sampling grid. Repeated runs over
/// unchanged inputs skip the decoder (content-hash stamp). Videos with a
/// frames_dir are validated in place; videos with neither are virtual and
/// skipped.
IngestReport ingest(const BenchmarkManifest& manifest, const IngestConfig& config);

/// Frame file list for one cached or pre-extracted video; empty for virtual
/// videos.
std::vector<std::filesystem::path> cached_frames(const BenchmarkManifest& manifest,
                                                 const VideoEntry& video,
                                                 const std::filesystem::path& cache_dir);

}  // namespace vground
