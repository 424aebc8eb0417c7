#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vground/backend.hpp"
#include "vground/timeline.hpp"

namespace vground {

/// A virtual crop of a source video that still contains the original event,
/// relocated to a random position inside the crop.
struct ShiftedSample {
  std::string video_id;
  Moment crop;           // window in source-video seconds
  Moment event_in_crop;  // original event translated by -crop.start
  std::uint64_t seed = 0;
};

/// Crop-length default when a harness does not pin one: long enough to allow
/// real displacement, never longer than the video.
double default_crop_len(const Moment& event, double duration);

/// Draws the crop start uniformly over every placement that contains the
/// event. A crop longer than the video degenerates to the full video.
ShiftedSample time_shift_sample(const std::string& video_id, double duration,
                                const Moment& event, double crop_len,
                                std::uint64_t seed);

struct Decomposition {
  std::vector<std::string> questions;
  bool warning = false;  // set when the reply held no parsable question
};

/// The object-extraction prompt, with {query} substituted by callers.
const std::string& decomposition_prompt_template();

/// Asks the backend to break a query into "When does <object> appear?"
/// questions and parses the reply. An empty result is a warning, not an
/// error: some queries reference nothing groundable.
Decomposition decompose_query(const std::string& query, Backend& backend);

/// Mean IoG of each object-query's top-1 prediction against the original
/// ground truth.
double iog_of_decomposition(const std::vector<std::vector<Moment>>& predictions,
                            const Moment& original_gt);

}  // namespace vground
