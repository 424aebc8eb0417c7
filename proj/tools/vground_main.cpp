#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vground/commands.hpp"

namespace {

void add_backend_flags(CLI::App* cmd, vground::BackendChoice& backend) {
  cmd->add_option("--backend", backend.kind, "Backend: oracle | fixture | remote")
      ->check(CLI::IsMember({"oracle", "fixture", "remote"}));
  cmd->add_option("--fixtures", backend.fixtures, "Fixture file for --backend fixture");
  cmd->add_option("--oracle-offset", backend.oracle_offset,
                  "Fixed offset (seconds) the oracle adds to both endpoints");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal video temporal grounding engine"};
  app.require_subcommand(1);

  vground::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Decode manifest media into the frame cache");
  ingest_cmd->add_option("--manifest", ingest.manifest)->required();
  ingest_cmd->add_option("--cache-dir", ingest.cache_dir)->required();
  ingest_cmd->add_option("--decoder", ingest.decoder,
                         "Decoder command template with {input} {output} {fps}");

  vground::GroundOptions ground;
  auto* ground_cmd = app.add_subcommand("ground", "Run multi-stage grounding over a manifest");
  ground_cmd->add_option("--manifest", ground.manifest)->required();
  ground_cmd->add_option("--out", ground.out)->required();
  add_backend_flags(ground_cmd, ground.backend);
  ground_cmd->add_option("--config", ground.config);
  ground_cmd->add_option("--cache-dir", ground.cache_dir);
  ground_cmd->add_option("--seed", ground.seed);
  ground_cmd->add_option("--record-fixtures", ground.record_fixtures,
                         "Record every completion for later fixture replay");

  vground::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a manifest");
  eval_cmd->add_option("--manifest", eval.manifest)->required();
  eval_cmd->add_option("--predictions", eval.predictions)->required();
  eval_cmd->add_option("--out", eval.out)->required();
  eval_cmd->add_option("--csv", eval.csv, "Per-record CSV export");
  eval_cmd->add_option("--thresholds", eval.thresholds, "IoU thresholds for R1");

  auto* perturb_cmd = app.add_subcommand("perturb", "Robustness harnesses");
  perturb_cmd->require_subcommand(1);

  vground::PerturbShiftOptions shift;
  auto* shift_cmd = perturb_cmd->add_subcommand("shift", "Re-place events at random positions");
  shift_cmd->add_option("--manifest", shift.manifest)->required();
  shift_cmd->add_option("--out", shift.out)->required();
  shift_cmd->add_option("--seed", shift.seed);
  shift_cmd->add_option("--crop-len", shift.crop_len, "Crop length in seconds");
  shift_cmd->add_option("--repeats", shift.repeats, "Placements per event");

  vground::PerturbDecomposeOptions decompose;
  auto* decompose_cmd =
      perturb_cmd->add_subcommand("decompose", "Break queries into object questions");
  decompose_cmd->add_option("--manifest", decompose.manifest)->required();
  decompose_cmd->add_option("--out", decompose.out)->required();
  add_backend_flags(decompose_cmd, decompose.backend);
  decompose_cmd->add_option("--config", decompose.config);

  vground::PackOptions pack;
  auto* pack_cmd = app.add_subcommand("pack", "Emit video-centric packed batches");
  pack_cmd->add_option("--manifest", pack.manifest)->required();
  pack_cmd->add_option("--out", pack.out)->required();
  pack_cmd->add_option("--config", pack.config);

  vground::DatagenOptions datagen;
  auto* datagen_cmd = app.add_subcommand("datagen", "Build multi-granularity training samples");
  datagen_cmd->add_option("--manifest", datagen.manifest)->required();
  datagen_cmd->add_option("--out", datagen.out)->required();
  datagen_cmd->add_option("--config", datagen.config);
  datagen_cmd->add_option("--seed", datagen.seed);
  datagen_cmd->add_option("--nrep", datagen.n_rep, "Long-sample replication factor");

  vground::VqaOptions vqa;
  auto* vqa_cmd = app.add_subcommand("vqa", "Retrieval-augmented multiple-choice QA");
  vqa_cmd->add_option("--manifest", vqa.manifest)->required();
  vqa_cmd->add_option("--out", vqa.out, "Per-item results (JSON lines)")->required();
  vqa_cmd->add_option("--report", vqa.report, "Summary JSON")->required();
  add_backend_flags(vqa_cmd, vqa.backend);
  vqa_cmd->add_option("--grounding", vqa.grounding, "Predictions file to reuse");
  vqa_cmd->add_option("--config", vqa.config);
  vqa_cmd->add_option("--record-fixtures", vqa.record_fixtures);

  vground::ExportTimelineOptions timeline;
  auto* timeline_cmd =
      app.add_subcommand("export-timeline", "Write one SVG timeline per query");
  timeline_cmd->add_option("--manifest", timeline.manifest)->required();
  timeline_cmd->add_option("--predictions", timeline.predictions)->required();
  timeline_cmd->add_option("--out-dir", timeline.out_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) return vground::cmd_ingest(ingest);
    if (*ground_cmd) return vground::cmd_ground(ground);
    if (*eval_cmd) return vground::cmd_eval(eval);
    if (*shift_cmd) return vground::cmd_perturb_shift(shift);
    if (*decompose_cmd) return vground::cmd_perturb_decompose(decompose);
    if (*pack_cmd) return vground::cmd_pack(pack);
    if (*datagen_cmd) return vground::cmd_datagen(datagen);
    if (*vqa_cmd) return vground::cmd_vqa(vqa);
    if (*timeline_cmd) return vground::cmd_export_timeline(timeline);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 1;
}
