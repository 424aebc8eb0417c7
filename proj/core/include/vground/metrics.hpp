#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vground/timeline.hpp"

namespace vground {

struct EvalRecord {
  std::string query_id;
  std::vector<Moment> predicted;     // may be empty: scores as zero overlap
  std::vector<Moment> ground_truth;  // non-empty
  std::optional<std::vector<std::size_t>> retrieved_segments;
  std::optional<std::vector<std::size_t>> gt_segments;
};

struct MetricReport {
  std::vector<std::pair<double, double>> r1_at;  // (threshold, fraction)
  double miou = 0.0;
  double iop_mean = 0.0;
  double iog_mean = 0.0;
  double r_at_iou = 0.0;  // mean R1 over thresholds 0.1..0.5
  std::optional<double> seg_retrieval_r1;
  std::size_t n = 0;

  /// Flat JSON: {"r1@0.30": ..., "miou": ..., ...}.
  nlohmann::json to_json() const;
};

double iou(const Moment& pred, const Moment& gt);
/// Intersection over prediction. A zero-length prediction scores 1 when the
/// point lies inside the ground truth, 0 otherwise.
double iop(const Moment& pred, const Moment& gt);
double iog(const Moment& pred, const Moment& gt);

/// Per-record scores of the top-1 prediction against its best-matching
/// ground-truth moment (max IoU; ties keep the first).
struct RecordScore {
  double iou = 0.0;
  double iop = 0.0;
  double iog = 0.0;
};
RecordScore score_record(const EvalRecord& record);

MetricReport evaluate(std::span<const EvalRecord> records,
                      std::span<const double> thresholds);

double r_at_iou(std::span<const EvalRecord> records);

/// Fraction of records whose retrieved segments intersect the ground-truth
/// segment set. Throws std::invalid_argument when a record lacks either set.
double segment_retrieval_r1(std::span<const EvalRecord> records);

struct ConsistencyReport {
  double ground_miou = 0.0;
  double ground_r1 = 0.0;  // at r1_threshold
  double r_ground = 0.0;   // mean IoU between original and variant predictions
  double r_ground_relative = 0.0;
  std::optional<double> s_ground;  // R1 against the shifted ground truth
  std::optional<double> s_ground_relative;
};

/// Prediction-consistency scores. Rephrased variants are keyed by the
/// original query id and carry one prediction list per variant; shifted
/// records carry predictions scored against the relocated ground truth.
/// Relative scores are score / original-Ground x 100.
ConsistencyReport consistency_scores(
    std::span<const EvalRecord> original,
    const std::map<std::string, std::vector<std::vector<Moment>>>& rephrased_variants,
    std::span<const EvalRecord> shifted = {}, double r1_threshold = 0.5);

/// Per-record CSV export for error analysis.
void write_records_csv(std::ostream& out, std::span<const EvalRecord> records,
                       std::span<const double> thresholds);

}  // namespace vground
