#pragma once

#include <string>

#include "vground/manifest.hpp"

namespace vground {

/// Static timeline figure for one query: ground-truth band, one band per
/// retrieval stage, and the final prediction, all on a shared time axis.
std::string render_timeline_svg(const QueryEntry& query, const VideoEntry& video,
                                const PredictionRecord& prediction);

}  // namespace vground
