#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "support.hpp"
#include "vground/metrics.hpp"

using namespace vground;

namespace {

// Independent scorer following the defining formulas directly; kept separate
// from the implementation path it checks.
struct BruteScore {
  double iou, iop, iog;
};

BruteScore brute_score(const EvalRecord& record) {
  if (record.predicted.empty()) return {0.0, 0.0, 0.0};
  const Moment p = record.predicted[0];
  double best_iou = -1.0;
  Moment best_gt{};
  for (const auto& g : record.ground_truth) {
    const double inter =
        std::max(0.0, std::min(p.end, g.end) - std::max(p.start, g.start));
    const double uni = (p.end - p.start) + (g.end - g.start) - inter;
    const double v = uni > 0.0 ? inter / uni : 0.0;
    if (v > best_iou) {
      best_iou = v;
      best_gt = g;
    }
  }
  const double inter =
      std::max(0.0, std::min(p.end, best_gt.end) - std::max(p.start, best_gt.start));
  const double plen = p.end - p.start;
  const double iop_v = plen > 0.0
                           ? inter / plen
                           : (p.start >= best_gt.start && p.start <= best_gt.end ? 1.0
                                                                                 : 0.0);
  return {best_iou, iop_v, inter / (best_gt.end - best_gt.start)};
}

std::vector<EvalRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    EvalRecord record;
    record.query_id = "q" + std::to_string(i);
    const std::size_t gts = 1 + test::uniform_index(rng, 3);
    for (std::size_t g = 0; g < gts; ++g) {
      const double s = test::uniform(rng, 0.0, 100.0);
      record.ground_truth.push_back({s, s + test::uniform(rng, 0.1, 40.0)});
    }
    if (test::uniform_index(rng, 10) != 0) {  // one in ten stays empty
      const double s = test::uniform(rng, 0.0, 100.0);
      record.predicted.push_back({s, s + test::uniform(rng, 0.0, 40.0)});
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

TEST_CASE("overlap metrics: worked example and identities") {
  const Moment pred{4, 10};
  const Moment gt{2, 8};
  CHECK(iou(pred, gt) == doctest::Approx(0.5));
  CHECK(iop(pred, gt) == doctest::Approx(2.0 / 3.0));
  CHECK(iog(pred, gt) == doctest::Approx(2.0 / 3.0));

  CHECK(iou(gt, gt) == 1.0);
  CHECK(iop(gt, gt) == 1.0);
  CHECK(iog(gt, gt) == 1.0);

  const Moment far{50, 60};
  CHECK(iou(far, gt) == 0.0);
  CHECK(iop(far, gt) == 0.0);
  CHECK(iog(far, gt) == 0.0);

  CHECK_THROWS_AS(iou(pred, Moment{3, 3}), std::invalid_argument);
}

TEST_CASE("point predictions keep IoP total") {
  CHECK(iop(Moment{5, 5}, Moment{2, 8}) == 1.0);
  CHECK(iop(Moment{9, 9}, Moment{2, 8}) == 0.0);
}

TEST_CASE("metric bounds and ordering hold on random pairs") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5000; ++i) {
    const double gs = test::uniform(rng, 0.0, 50.0);
    const Moment gt{gs, gs + test::uniform(rng, 0.1, 30.0)};
    const double ps = test::uniform(rng, 0.0, 50.0);
    const Moment pred{ps, ps + test::uniform(rng, 0.0, 30.0)};

    const double u = iou(pred, gt);
    const double p = iop(pred, gt);
    const double g = iog(pred, gt);
    CHECK(u >= 0.0);
    CHECK(u <= 1.0);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
    CHECK(u <= std::min(p, g) + 1e-12);
  }
}

TEST_CASE("evaluate aggregates R1 and mIoU") {
  std::vector<EvalRecord> records;
  // IoU 0.6: pred (0,6) vs gt (0,10) -> inter 6 / union 10.
  records.push_back({"a", {{0, 6}}, {{0, 10}}, {}, {}});
  // IoU 0.4: pred (0,4) vs gt (0,10).
  records.push_back({"b", {{0, 4}}, {{0, 10}}, {}, {}});

  const double thresholds[] = {0.5};
  const auto report = evaluate(records, thresholds);
  CHECK(report.r1_at[0].second == doctest::Approx(0.5));
  CHECK(report.miou == doctest::Approx(0.5));
  CHECK(report.n == 2);

  SUBCASE("exact predictions score one everywhere") {
    for (auto& r : records) r.predicted = r.ground_truth;
    const auto perfect = evaluate(records, thresholds);
    CHECK(perfect.miou == 1.0);
    CHECK(perfect.r1_at[0].second == 1.0);
    CHECK(perfect.r_at_iou == 1.0);
    CHECK(perfect.iop_mean == 1.0);
    CHECK(perfect.iog_mean == 1.0);
  }
  SUBCASE("empty predictions score zero everywhere") {
    for (auto& r : records) r.predicted.clear();
    const auto zero = evaluate(records, thresholds);
    CHECK(zero.miou == 0.0);
    CHECK(zero.r1_at[0].second == 0.0);
    CHECK(zero.r_at_iou == 0.0);
  }
}

TEST_CASE("multiple ground truths score against the best match") {
  EvalRecord record{"a", {{10, 20}}, {{0, 5}, {11, 19}, {40, 50}}, {}, {}};
  const auto score = score_record(record);
  CHECK(score.iou == doctest::Approx(0.8));
}

TEST_CASE("r_at_iou sweeps thresholds 0.1 through 0.5") {
  // IoU 0.45: pred (0,45) vs gt (0,100) -> 45/100... use (0,9) vs (0,20).
  std::vector<EvalRecord> records{{"a", {{0.0, 9.0}}, {{0.0, 20.0}}, {}, {}}};
  CHECK(score_record(records[0]).iou == doctest::Approx(0.45));
  CHECK(r_at_iou(records) == doctest::Approx(0.8));

  records[0].predicted = records[0].ground_truth;
  CHECK(r_at_iou(records) == 1.0);

  records[0].predicted = {{0.0, 1.0}};  // IoU 0.05
  CHECK(r_at_iou(records) == 0.0);
}

TEST_CASE("R1 is non-increasing in the threshold") {
  std::mt19937_64 rng(23);
  const auto records = random_records(rng, 300);
  const double thresholds[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  const auto report = evaluate(records, thresholds);
  for (std::size_t i = 1; i < report.r1_at.size(); ++i) {
    CHECK(report.r1_at[i].second <= report.r1_at[i - 1].second);
  }
}

TEST_CASE("evaluate is permutation-invariant") {
  std::mt19937_64 rng(29);
  auto records = random_records(rng, 200);
  const double thresholds[] = {0.3, 0.5};
  const auto before = evaluate(records, thresholds);
  std::shuffle(records.begin(), records.end(), rng);
  const auto after = evaluate(records, thresholds);
  CHECK(before.miou == doctest::Approx(after.miou).epsilon(1e-12));
  CHECK(before.r1_at[0].second == after.r1_at[0].second);
  CHECK(before.r1_at[1].second == after.r1_at[1].second);
  CHECK(before.r_at_iou == doctest::Approx(after.r_at_iou).epsilon(1e-12));
}

TEST_CASE("evaluate matches the independent brute-force scorer") {
  std::mt19937_64 rng(31);
  const auto records = random_records(rng, 1000);
  for (const auto& record : records) {
    const auto mine = score_record(record);
    const auto brute = brute_score(record);
    CHECK(std::abs(mine.iou - brute.iou) <= 1e-12);
    CHECK(std::abs(mine.iop - brute.iop) <= 1e-12);
    CHECK(std::abs(mine.iog - brute.iog) <= 1e-12);
  }
}

TEST_CASE("segment retrieval accuracy counts set hits") {
  std::vector<EvalRecord> records;
  records.push_back({"a", {}, {{0, 1}}, std::vector<std::size_t>{3},
                     std::vector<std::size_t>{3, 4}});
  records.push_back({"b", {}, {{0, 1}}, std::vector<std::size_t>{1, 2},
                     std::vector<std::size_t>{5}});
  CHECK(segment_retrieval_r1(records) == doctest::Approx(0.5));

  records.push_back({"c", {}, {{0, 1}}, std::vector<std::size_t>{0},
                     std::vector<std::size_t>{0}});
  records.push_back({"d", {}, {{0, 1}}, std::vector<std::size_t>{9},
                     std::vector<std::size_t>{2}});
  CHECK(segment_retrieval_r1(records) == doctest::Approx(0.5));

  records.push_back({"e", {}, {{0, 1}}, {}, {}});
  CHECK_THROWS_AS(segment_retrieval_r1(records), std::invalid_argument);
}

TEST_CASE("consistency scores") {
  SUBCASE("identical variants of perfect predictions give relative 100") {
    std::vector<EvalRecord> original;
    std::map<std::string, std::vector<std::vector<Moment>>> variants;
    for (int i = 0; i < 4; ++i) {
      const Moment gt{i * 10.0, i * 10.0 + 5.0};
      const std::string id = "q" + std::to_string(i);
      original.push_back({id, {gt}, {gt}, {}, {}});
      variants[id] = {{gt}, {gt}, {gt}};
    }
    const auto report = consistency_scores(original, variants);
    CHECK(report.ground_miou == 1.0);
    CHECK(report.r_ground == doctest::Approx(report.ground_miou));
    CHECK(report.r_ground_relative == doctest::Approx(100.0));
  }

  SUBCASE("shifted R1 ratio") {
    // Original R1@0.5 = 0.8 (4 of 5), shifted R1 = 0.6 (3 of 5).
    std::vector<EvalRecord> original;
    std::vector<EvalRecord> shifted;
    for (int i = 0; i < 5; ++i) {
      const std::string id = "q" + std::to_string(i);
      const Moment gt{0.0, 10.0};
      original.push_back({id, {i < 4 ? gt : Moment{50, 60}}, {gt}, {}, {}});
      shifted.push_back({id, {i < 3 ? gt : Moment{50, 60}}, {gt}, {}, {}});
    }
    const auto report = consistency_scores(original, {}, shifted);
    CHECK(report.ground_r1 == doctest::Approx(0.8));
    REQUIRE(report.s_ground.has_value());
    CHECK(*report.s_ground == doctest::Approx(0.6));
    CHECK(*report.s_ground_relative == doctest::Approx(75.0));
  }

  SUBCASE("unknown ids are rejected") {
    std::vector<EvalRecord> original{{"a", {{0, 1}}, {{0, 1}}, {}, {}}};
    std::map<std::string, std::vector<std::vector<Moment>>> variants;
    variants["nope"] = {{{0.0, 1.0}}};
    CHECK_THROWS_AS(consistency_scores(original, variants), std::invalid_argument);
  }
}

TEST_CASE("report serialization uses flat metric keys") {
  std::vector<EvalRecord> records{{"a", {{0, 10}}, {{0, 10}}, {}, {}}};
  const double thresholds[] = {0.3, 0.5};
  const auto doc = evaluate(records, thresholds).to_json();
  CHECK(doc.at("r1@0.30") == 1.0);
  CHECK(doc.at("r1@0.50") == 1.0);
  CHECK(doc.at("miou") == 1.0);
  CHECK(doc.at("n") == 1);
  CHECK_FALSE(doc.contains("seg_retrieval_r1"));

  std::ostringstream csv;
  write_records_csv(csv, records, thresholds);
  CHECK(csv.str().find("query_id,iou,iop,iog,hit@0.30,hit@0.50") == 0);
  CHECK(csv.str().find("a,1.000000") != std::string::npos);
}
