#include "vground/timeline_svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace vground {

namespace {

constexpr double kWidth = 860.0;
constexpr double kLeft = 120.0;
constexpr double kRight = 20.0;
constexpr double kRowHeight = 26.0;
constexpr double kBandHeight = 14.0;

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void rect(std::ostringstream& svg, double x, double y, double w, const char* fill) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.1f\" "
                "fill=\"%s\" />\n",
                x, y, std::max(w, 1.0), kBandHeight, fill);
  svg << buf;
}

void label(std::ostringstream& svg, double y, const std::string& text) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "<text x=\"8\" y=\"%.2f\" font-size=\"11\">", y + 11.0);
  svg << buf << escape(text) << "</text>\n";
}

}  // namespace

std::string render_timeline_svg(const QueryEntry& query, const VideoEntry& video,
                                const PredictionRecord& prediction) {
  const double duration = video.duration;
  const double scale = (kWidth - kLeft - kRight) / duration;
  const auto x_of = [&](double t) { return kLeft + t * scale; };

  std::vector<int> coarse_stages;
  for (const auto& stage : prediction.stage_trace) {
    if (stage.kind == StageKind::Coarse &&
        (coarse_stages.empty() || coarse_stages.back() != stage.stage)) {
      coarse_stages.push_back(stage.stage);
    }
  }
  const std::size_t rows = 2 + coarse_stages.size();
  const double height = 40.0 + static_cast<double>(rows) * kRowHeight;

  std::ostringstream svg;
  char head[160];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                kWidth, height, kWidth, height);
  svg << head;
  svg << "<text x=\"8\" y=\"16\" font-size=\"12\">" << escape(query.id) << ": "
      << escape(query.text) << "</text>\n";

  double y = 30.0;
  label(svg, y, "ground truth");
  for (const auto& m : query.gt) {
    rect(svg, x_of(m.start), y, (m.end - m.start) * scale, "#2e7d32");
  }

  for (int stage_no : coarse_stages) {
    y += kRowHeight;
    label(svg, y, "stage " + std::to_string(stage_no));
    std::size_t stage_calls = 0;
    for (const auto& stage : prediction.stage_trace) {
      stage_calls += stage.kind == StageKind::Coarse && stage.stage == stage_no;
    }
    std::size_t call = 0;
    for (const auto& stage : prediction.stage_trace) {
      if (stage.kind != StageKind::Coarse || stage.stage != stage_no) continue;
      // Catalog indices are relative to this call's input; render them as
      // proportional slices of the call's share of the timeline.
      const double call_span = duration / static_cast<double>(stage_calls);
      const double call_begin = call_span * static_cast<double>(call++);
      const auto n_segments = std::max<std::size_t>(
          1, (stage.input_frames + 31) / 32);
      const double slice = call_span / static_cast<double>(n_segments);
      for (std::size_t segment : stage.retrieved_segments) {
        rect(svg, x_of(call_begin + static_cast<double>(segment) * slice), y,
             slice * scale, "#1565c0");
      }
    }
  }

  y += kRowHeight;
  label(svg, y, "final");
  for (const auto& m : prediction.moments) {
    rect(svg, x_of(m.start), y, (m.end - m.start) * scale, "#c62828");
  }

  // Time axis.
  y += kRowHeight;
  char axis[256];
  std::snprintf(axis, sizeof axis,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                "stroke=\"#444\" stroke-width=\"1\" />\n",
                kLeft, y, kWidth - kRight, y);
  svg << axis;
  std::snprintf(axis, sizeof axis,
                "<text x=\"%.2f\" y=\"%.2f\" font-size=\"10\">0s</text>\n"
                "<text x=\"%.2f\" y=\"%.2f\" font-size=\"10\" "
                "text-anchor=\"end\">%.1fs</text>\n",
                kLeft, y + 14.0, kWidth - kRight, y + 14.0, duration);
  svg << axis;
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace vground
