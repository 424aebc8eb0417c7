#include "vground/promptseq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>
#include <set>

namespace vground {

namespace {

std::string substitute_query(std::string tmpl, const std::string& query) {
  const std::string needle = "{query}";
  for (std::size_t pos = tmpl.find(needle); pos != std::string::npos;
       pos = tmpl.find(needle, pos + query.size())) {
    tmpl.replace(pos, needle.size(), query);
  }
  return tmpl;
}

std::string format_seconds(double seconds, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, seconds);
  return buf;
}

std::vector<std::size_t> range_indices(const FrameGrid& grid, const FrameRange& range) {
  if (range.empty()) {
    throw std::invalid_argument("frame range is empty");
  }
  if (range.end > grid.size()) {
    throw std::invalid_argument("frame range exceeds the grid");
  }
  std::vector<std::size_t> idx(range.size());
  std::iota(idx.begin(), idx.end(), range.begin);
  return idx;
}

const std::regex& fine_clause_regex() {
  static const std::regex re(
      R"(from\s+(-?\d+(?:\.\d+)?)\s*seconds?\s+to\s+(-?\d+(?:\.\d+)?)\s*seconds?)",
      std::regex::icase);
  return re;
}

const std::regex& seconds_numeral_regex() {
  static const std::regex re(R"((-?\d+(?:\.\d+)?)\s*seconds?)", std::regex::icase);
  return re;
}

}  // namespace

std::size_t PromptSequence::count_timestamps() const {
  return static_cast<std::size_t>(std::count_if(
      elements.begin(), elements.end(),
      [](const SequenceElement& e) { return std::holds_alternative<TimestampText>(e); }));
}

std::size_t PromptSequence::count_frames() const {
  return elements.size() - count_timestamps();
}

void PromptSequence::validate() const {
  std::size_t group = 0;  // frames seen since the last timestamp
  bool saw_timestamp = false;
  std::size_t last_frame = 0;
  bool have_frame = false;
  const std::size_t expected =
      granularity == Granularity::Fine ? 1 : static_cast<std::size_t>(segment_length);

  auto check_group = [&](bool last) {
    if (!saw_timestamp) return;
    if (group == 0) {
      throw std::logic_error("timestamp element without frames");
    }
    if (granularity == Granularity::Fine && group != 1) {
      throw std::logic_error("fine sequence needs exactly one frame per timestamp");
    }
    if (granularity == Granularity::Coarse && group != expected && !last) {
      throw std::logic_error("coarse segment has wrong frame count");
    }
  };

  for (const auto& element : elements) {
    if (const auto* ts = std::get_if<TimestampText>(&element)) {
      (void)ts;
      check_group(false);
      saw_timestamp = true;
      group = 0;
    } else {
      const auto& frame = std::get<FrameRef>(element);
      if (!saw_timestamp) {
        throw std::logic_error("frame before the first timestamp");
      }
      if (have_frame && frame.frame_index <= last_frame) {
        throw std::logic_error("frame indices must be strictly increasing");
      }
      last_frame = frame.frame_index;
      have_frame = true;
      ++group;
    }
  }
  check_group(true);
}

std::vector<double> SegmentCatalog::start_timestamps() const {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.start_timestamp);
  return out;
}

int decimals_for_fps(double fps) {
  int decimals = 1;
  while (decimals < 9 && std::pow(10.0, -decimals) > 1.0 / fps + 1e-12) {
    ++decimals;
  }
  return decimals;
}

std::string render_timestamp(double seconds, int decimals) {
  return "timestamp: " + format_seconds(seconds, decimals) + " seconds";
}

std::string render_answer(std::span<const Moment> moments, int decimals) {
  if (moments.empty()) {
    throw std::invalid_argument("render_answer: empty moment list");
  }
  std::string out;
  for (std::size_t i = 0; i < moments.size(); ++i) {
    if (i) out += "; ";
    out += "From " + format_seconds(moments[i].start, decimals) + " seconds to " +
           format_seconds(moments[i].end, decimals) + " seconds";
  }
  return out;
}

std::string render_segment_answer(std::span<const double> start_timestamps,
                                  int decimals) {
  if (start_timestamps.empty()) {
    throw std::invalid_argument("render_segment_answer: empty timestamp list");
  }
  std::string out;
  for (std::size_t i = 0; i < start_timestamps.size(); ++i) {
    if (i) out += ", ";
    out += format_seconds(start_timestamps[i], decimals) + " seconds";
  }
  return out;
}

PromptSequence build_fine_sequence_over(const FrameGrid& grid,
                                        std::span<const std::size_t> frames,
                                        const std::string& query, int budget,
                                        const PromptTemplates& templates) {
  if (frames.empty()) {
    throw std::invalid_argument("build_fine_sequence: empty frame set");
  }
  PromptSequence seq;
  seq.system_text = templates.system;
  seq.task_text = substitute_query(templates.fine_task, query);
  seq.query = query;
  seq.granularity = Granularity::Fine;
  seq.timestamp_decimals = decimals_for_fps(grid.fps);
  seq.elements.reserve(frames.size() * 2);
  for (std::size_t frame : frames) {
    const double t = grid.at(frame);
    seq.elements.push_back(TimestampText{t, render_timestamp(t, seq.timestamp_decimals)});
    seq.elements.push_back(FrameRef{frame, budget});
  }
  return seq;
}

PromptSequence build_fine_sequence(const FrameGrid& grid, const FrameRange& range,
                                   const std::string& query, int budget,
                                   const PromptTemplates& templates) {
  const auto idx = range_indices(grid, range);
  return build_fine_sequence_over(grid, idx, query, budget, templates);
}

CoarseSequence build_coarse_sequence_over(const FrameGrid& grid,
                                          std::span<const std::size_t> frames,
                                          int segment_length, const std::string& query,
                                          int budget, const PromptTemplates& templates) {
  if (frames.empty()) {
    throw std::invalid_argument("build_coarse_sequence: empty frame set");
  }
  if (segment_length < 1) {
    throw std::invalid_argument("build_coarse_sequence: segment length must be >= 1");
  }
  CoarseSequence out;
  auto& seq = out.sequence;
  seq.system_text = templates.system;
  seq.task_text = substitute_query(templates.coarse_task, query);
  seq.query = query;
  seq.granularity = Granularity::Coarse;
  seq.segment_length = segment_length;
  seq.timestamp_decimals = decimals_for_fps(grid.fps);

  const auto step = static_cast<std::size_t>(segment_length);
  for (std::size_t begin = 0; begin < frames.size(); begin += step) {
    const std::size_t end = std::min(begin + step, frames.size());
    const std::size_t head = frames[begin];
    const double t = grid.at(head);
    seq.elements.push_back(TimestampText{t, render_timestamp(t, seq.timestamp_decimals)});
    for (std::size_t i = begin; i < end; ++i) {
      seq.elements.push_back(FrameRef{frames[i], budget});
    }
    out.catalog.segments.push_back(
        Segment{out.catalog.segments.size(), head, t, end - begin});
  }
  return out;
}

CoarseSequence build_coarse_sequence(const FrameGrid& grid, const FrameRange& range,
                                     int segment_length, const std::string& query,
                                     int budget, const PromptTemplates& templates) {
  const auto idx = range_indices(grid, range);
  return build_coarse_sequence_over(grid, idx, segment_length, query, budget, templates);
}

std::vector<Moment> parse_fine_answer(const std::string& text,
                                      std::span<const double> timestamps) {
  if (timestamps.empty()) {
    throw std::invalid_argument("parse_fine_answer: empty timestamp set");
  }
  std::vector<Moment> moments;
  auto begin = std::sregex_iterator(text.begin(), text.end(), fine_clause_regex());
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    double s = std::stod((*it)[1].str());
    double e = std::stod((*it)[2].str());
    if (s > e) std::swap(s, e);  // generative outputs occasionally invert
    const Moment m{snap_to(s, timestamps), snap_to(e, timestamps)};
    if (std::find(moments.begin(), moments.end(), m) == moments.end()) {
      moments.push_back(m);
    }
  }
  if (moments.empty()) {
    throw ParseFailure("no temporal window clause in: " + text);
  }
  return moments;
}

std::vector<Moment> parse_fine_answer(const std::string& text, const FrameGrid& grid) {
  return parse_fine_answer(text, grid.timestamps);
}

std::vector<std::size_t> parse_coarse_answer(const std::string& text,
                                             const SegmentCatalog& catalog) {
  if (catalog.empty()) {
    throw std::invalid_argument("parse_coarse_answer: empty catalog");
  }
  const auto starts = catalog.start_timestamps();
  std::set<std::size_t> indices;
  auto begin = std::sregex_iterator(text.begin(), text.end(), seconds_numeral_regex());
  std::size_t numerals = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it, ++numerals) {
    indices.insert(snap_index_to(std::stod((*it)[1].str()), starts));
  }
  if (numerals == 0) {
    throw ParseFailure("no timestamp numeral in: " + text);
  }
  return {indices.begin(), indices.end()};
}

}  // namespace vground
