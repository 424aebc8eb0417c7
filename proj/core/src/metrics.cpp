#include "vground/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace vground {

namespace {

constexpr double kSweepThresholds[] = {0.1, 0.2, 0.3, 0.4, 0.5};

void require_valid_gt(const Moment& gt) {
  if (gt.length() <= 0.0) {
    throw std::invalid_argument("metrics: ground-truth moment has zero length");
  }
}

std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r1@%.2f", t);
  return buf;
}

double r1_fraction(std::span<const double> ious, double threshold) {
  std::size_t hits = 0;
  for (double v : ious) hits += v >= threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ious.size());
}

}  // namespace

double iou(const Moment& pred, const Moment& gt) {
  require_valid_gt(gt);
  const double inter = intersect_len(pred, gt);
  const double uni = union_len(pred, gt);
  return uni > 0.0 ? inter / uni : 0.0;
}

double iop(const Moment& pred, const Moment& gt) {
  require_valid_gt(gt);
  if (pred.length() <= 0.0) {
    return (pred.start >= gt.start && pred.start <= gt.end) ? 1.0 : 0.0;
  }
  return intersect_len(pred, gt) / pred.length();
}

double iog(const Moment& pred, const Moment& gt) {
  require_valid_gt(gt);
  return intersect_len(pred, gt) / gt.length();
}

RecordScore score_record(const EvalRecord& record) {
  if (record.ground_truth.empty()) {
    throw std::invalid_argument("metrics: record '" + record.query_id +
                                "' has no ground truth");
  }
  if (record.predicted.empty()) {
    return {};
  }
  const Moment& top1 = record.predicted.front();
  const Moment* best = &record.ground_truth.front();
  double best_iou = iou(top1, *best);
  for (std::size_t k = 1; k < record.ground_truth.size(); ++k) {
    const double candidate = iou(top1, record.ground_truth[k]);
    if (candidate > best_iou) {
      best_iou = candidate;
      best = &record.ground_truth[k];
    }
  }
  return {best_iou, iop(top1, *best), iog(top1, *best)};
}

MetricReport evaluate(std::span<const EvalRecord> records,
                      std::span<const double> thresholds) {
  if (records.empty()) {
    throw std::invalid_argument("evaluate: no records");
  }
  std::vector<double> ious;
  ious.reserve(records.size());
  double iou_sum = 0.0;
  double iop_sum = 0.0;
  double iog_sum = 0.0;
  bool all_have_segments = true;
  std::size_t seg_hits = 0;
  for (const auto& record : records) {
    const RecordScore score = score_record(record);
    ious.push_back(score.iou);
    iou_sum += score.iou;
    iop_sum += score.iop;
    iog_sum += score.iog;
    if (record.retrieved_segments && record.gt_segments) {
      const auto& got = *record.retrieved_segments;
      const auto& want = *record.gt_segments;
      seg_hits += std::any_of(got.begin(), got.end(), [&](std::size_t s) {
        return std::find(want.begin(), want.end(), s) != want.end();
      });
    } else {
      all_have_segments = false;
    }
  }

  MetricReport report;
  report.n = records.size();
  const auto n = static_cast<double>(records.size());
  report.miou = iou_sum / n;
  report.iop_mean = iop_sum / n;
  report.iog_mean = iog_sum / n;
  for (double t : thresholds) {
    report.r1_at.emplace_back(t, r1_fraction(ious, t));
  }
  report.r_at_iou = (r1_fraction(ious, kSweepThresholds[0]) +
                     r1_fraction(ious, kSweepThresholds[1]) +
                     r1_fraction(ious, kSweepThresholds[2]) +
                     r1_fraction(ious, kSweepThresholds[3]) +
                     r1_fraction(ious, kSweepThresholds[4])) /
                    5.0;
  if (all_have_segments) {
    report.seg_retrieval_r1 = static_cast<double>(seg_hits) / n;
  }
  return report;
}

double r_at_iou(std::span<const EvalRecord> records) {
  return evaluate(records, {}).r_at_iou;
}

double segment_retrieval_r1(std::span<const EvalRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("segment_retrieval_r1: no records");
  }
  std::size_t hits = 0;
  for (const auto& record : records) {
    if (!record.retrieved_segments || !record.gt_segments) {
      throw std::invalid_argument("segment_retrieval_r1: record '" + record.query_id +
                                  "' lacks segment fields");
    }
    const auto& got = *record.retrieved_segments;
    const auto& want = *record.gt_segments;
    hits += std::any_of(got.begin(), got.end(), [&](std::size_t s) {
      return std::find(want.begin(), want.end(), s) != want.end();
    });
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

ConsistencyReport consistency_scores(
    std::span<const EvalRecord> original,
    const std::map<std::string, std::vector<std::vector<Moment>>>& rephrased_variants,
    std::span<const EvalRecord> shifted, double r1_threshold) {
  if (original.empty()) {
    throw std::invalid_argument("consistency_scores: no original records");
  }
  std::map<std::string, const EvalRecord*> by_id;
  std::vector<double> original_ious;
  original_ious.reserve(original.size());
  for (const auto& record : original) {
    by_id[record.query_id] = &record;
    original_ious.push_back(score_record(record).iou);
  }

  ConsistencyReport report;
  const auto n = static_cast<double>(original.size());
  double sum = 0.0;
  for (double v : original_ious) sum += v;
  report.ground_miou = sum / n;
  report.ground_r1 = r1_fraction(original_ious, r1_threshold);

  double variant_sum = 0.0;
  std::size_t variant_queries = 0;
  for (const auto& [id, variant_lists] : rephrased_variants) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("consistency_scores: unknown variant query id '" + id +
                                  "'");
    }
    const auto& record = *it->second;
    if (record.predicted.empty() || variant_lists.empty()) {
      ++variant_queries;  // counts as zero consistency
      continue;
    }
    const Moment& m = record.predicted.front();
    double per_query = 0.0;
    for (const auto& variant : variant_lists) {
      if (!variant.empty()) {
        const Moment& m_hat = variant.front();
        const double uni = union_len(m, m_hat);
        per_query += uni > 0.0 ? intersect_len(m, m_hat) / uni : 0.0;
      }
    }
    variant_sum += per_query / static_cast<double>(variant_lists.size());
    ++variant_queries;
  }
  report.r_ground = variant_queries ? variant_sum / static_cast<double>(variant_queries) : 0.0;
  report.r_ground_relative =
      report.ground_miou > 0.0 ? report.r_ground / report.ground_miou * 100.0 : 0.0;

  if (!shifted.empty()) {
    std::vector<double> shifted_ious;
    shifted_ious.reserve(shifted.size());
    for (const auto& record : shifted) {
      if (!by_id.count(record.query_id)) {
        throw std::invalid_argument("consistency_scores: unknown shifted query id '" +
                                    record.query_id + "'");
      }
      shifted_ious.push_back(score_record(record).iou);
    }
    report.s_ground = r1_fraction(shifted_ious, r1_threshold);
    report.s_ground_relative =
        report.ground_r1 > 0.0 ? *report.s_ground / report.ground_r1 * 100.0 : 0.0;
  }
  return report;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json out;
  for (const auto& [threshold, fraction] : r1_at) {
    out[format_threshold(threshold)] = fraction;
  }
  out["miou"] = miou;
  out["iop_mean"] = iop_mean;
  out["iog_mean"] = iog_mean;
  out["r_at_iou"] = r_at_iou;
  if (seg_retrieval_r1) {
    out["seg_retrieval_r1"] = *seg_retrieval_r1;
  }
  out["n"] = n;
  return out;
}

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records,
                       std::span<const double> thresholds) {
  out << "query_id,iou,iop,iog";
  for (double t : thresholds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",hit@%.2f", t);
    out << buf;
  }
  out << '\n';
  for (const auto& record : records) {
    const RecordScore score = score_record(record);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f", record.query_id.c_str(),
                  score.iou, score.iop, score.iog);
    out << buf;
    for (double t : thresholds) {
      out << ',' << (score.iou >= t ? 1 : 0);
    }
    out << '\n';
  }
}

}  // namespace vground
