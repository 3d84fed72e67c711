// Copyright 2026 The affuq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "affuq/commands.hpp"
#include "affuq/config.hpp"
#include "affuq/dataset_io.hpp"
#include "affuq/error.hpp"

namespace
{

using affuq::json;

struct Options
{
  std::string config;
  std::string out;
  std::string in;
  std::string obs;
  std::string gt;
  std::string report;
  std::string curves;
  std::string avg_denominator;
  std::optional<double> iou_thresh;
  std::optional<std::uint64_t> seed;
  bool keep_intermediates{false};
};

affuq::SimConfig load_sim_config(const json & doc, const Options & opt)
{
  affuq::SimConfig cfg = affuq::sim_config_from_json(doc);
  affuq::apply_seed_overrides(cfg, opt.seed);
  cfg.validate();
  return cfg;
}

void print_dataset_summary(const affuq::Dataset & ds, std::uint64_t seed)
{
  std::size_t gt = 0;
  std::size_t dets = 0;
  for (const auto & f : ds.frames) {
    gt += f.ground_truth.size();
    for (const auto & pass : f.passes) {
      dets += pass.size();
    }
  }
  std::printf("seed %llu\n", static_cast<unsigned long long>(seed));
  std::printf("frames %zu  ground_truth %zu  detections %zu\n", ds.frames.size(), gt, dets);
}

affuq::FuseSettings apply_fuse_flags(affuq::FuseSettings settings, const Options & opt)
{
  if (opt.iou_thresh) {
    settings.clustering.iou_threshold = *opt.iou_thresh;
  }
  if (!opt.avg_denominator.empty()) {
    settings.fusion.denominator =
      opt.avg_denominator == "M" ? affuq::AveragingDenominator::kPassCount : affuq::AveragingDenominator::kMemberCount;
  }
  settings.clustering.validate();
  return settings;
}

void write_curves(const std::string & dir, const affuq::EvalOutcome & outcome)
{
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  if (outcome.semantic_curve) {
    affuq::write_text_file((base / "semantic_sparsification.csv").string(), affuq::curve_csv(*outcome.semantic_curve));
  }
  if (outcome.spatial_curve) {
    affuq::write_text_file((base / "spatial_sparsification.csv").string(), affuq::curve_csv(*outcome.spatial_curve));
  }
}

void print_report_summary(const affuq::EvalOutcome & outcome)
{
  std::printf(
    "pmq %.6f  tp %zu  fp %zu  fn %zu\n", outcome.pmq.pmq, outcome.pmq.tp, outcome.pmq.fp, outcome.pmq.fn);
}

int cmd_simulate(const Options & opt)
{
  const affuq::SimConfig cfg = load_sim_config(affuq::load_config_file(opt.config), opt);
  const affuq::Dataset ds = affuq::simulate_dataset(cfg);
  affuq::write_text_file(opt.out, affuq::dump_compact(affuq::dataset_to_json(ds, affuq::sim_config_to_json(cfg))));
  print_dataset_summary(ds, cfg.seed);
  return 0;
}

int cmd_fuse(const Options & opt)
{
  const affuq::DatasetDocument doc = affuq::dataset_from_json(affuq::read_json_file(opt.in));
  const affuq::FuseSettings settings = apply_fuse_flags(affuq::FuseSettings{}, opt);
  const affuq::ObservationSet set = affuq::run_fuse(doc.dataset, settings, doc.generator);
  affuq::write_text_file(opt.out, affuq::dump_compact(affuq::observations_to_json(set)));
  for (const auto & f : set.frames) {
    std::printf("%s %zu\n", f.frame_id.c_str(), f.observations.size());
  }
  return 0;
}

int cmd_eval(const Options & opt)
{
  const affuq::ObservationSet set = affuq::observations_from_json(affuq::read_json_file(opt.obs));
  const affuq::DatasetDocument doc = affuq::dataset_from_json(affuq::read_json_file(opt.gt));
  const affuq::EvalOutcome outcome = affuq::run_eval(set, doc, affuq::EvalSettings{});
  affuq::write_text_file(opt.report, affuq::dump_pretty(outcome.report));
  if (!opt.curves.empty()) {
    write_curves(opt.curves, outcome);
  }
  print_report_summary(outcome);
  return 0;
}

int cmd_pipeline(const Options & opt)
{
  const json doc = affuq::load_config_file(opt.config);
  const affuq::SimConfig sim = load_sim_config(doc, opt);
  const affuq::FuseSettings fuse = apply_fuse_flags(affuq::fuse_settings_from_config(doc), opt);
  const affuq::EvalSettings eval = affuq::eval_settings_from_config(doc);
  const affuq::PipelineArtifacts art = affuq::run_pipeline(sim, fuse, eval);
  affuq::write_text_file(opt.report, art.report_json);
  if (opt.keep_intermediates) {
    const std::filesystem::path report(opt.report);
    const std::filesystem::path dir = report.has_parent_path() ? report.parent_path() : std::filesystem::path(".");
    const std::string stem = report.stem().string();
    affuq::write_text_file((dir / (stem + ".dataset.json")).string(), art.dataset_json);
    affuq::write_text_file((dir / (stem + ".observations.json")).string(), art.observations_json);
  }
  if (!opt.curves.empty()) {
    write_curves(opt.curves, art.outcome);
  }
  std::printf("seed %llu\n", static_cast<unsigned long long>(sim.seed));
  print_report_summary(art.outcome);
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Fusion and evaluation of stochastic instance-segmentation detections"};
  app.require_subcommand(1);
  Options opt;

  auto * simulate = app.add_subcommand("simulate", "Generate a seeded synthetic dataset");
  simulate->add_option("--config", opt.config, "TOML or JSON config")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", opt.out, "Output dataset JSON")->required();
  simulate->add_option("--seed", opt.seed, "Overrides AFFUQ_SEED and the config seed");

  auto * fuse = app.add_subcommand("fuse", "Cluster and fuse detections into observations");
  fuse->add_option("--in", opt.in, "Input dataset JSON")->required();
  fuse->add_option("--out", opt.out, "Output observations JSON")->required();
  fuse->add_option("--iou-thresh", opt.iou_thresh, "Clustering mask IoU threshold")->check(CLI::Range(0.0, 1.0));
  fuse->add_option("--avg-denominator", opt.avg_denominator, "Heatmap averaging denominator")
    ->check(CLI::IsMember({"k", "M"}));

  auto * eval = app.add_subcommand("eval", "Score observations against ground truth");
  eval->add_option("--obs", opt.obs, "Observations JSON")->required();
  eval->add_option("--gt", opt.gt, "Dataset JSON with ground truth")->required();
  eval->add_option("--report", opt.report, "Output report JSON")->required();
  eval->add_option("--curves", opt.curves, "Directory for sparsification CSVs");

  auto * pipeline = app.add_subcommand("pipeline", "simulate, fuse and eval in one process");
  pipeline->add_option("--config", opt.config, "TOML or JSON config")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--report", opt.report, "Output report JSON")->required();
  pipeline->add_option("--seed", opt.seed, "Overrides AFFUQ_SEED and the config seed");
  pipeline->add_option("--curves", opt.curves, "Directory for sparsification CSVs");
  pipeline->add_option("--iou-thresh", opt.iou_thresh, "Clustering mask IoU threshold")->check(CLI::Range(0.0, 1.0));
  pipeline->add_option("--avg-denominator", opt.avg_denominator, "Heatmap averaging denominator")
    ->check(CLI::IsMember({"k", "M"}));
  pipeline->add_flag(
    "--keep-intermediates", opt.keep_intermediates,
    "Also write <report>.dataset.json and <report>.observations.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(opt);
    }
    if (app.got_subcommand(fuse)) {
      return cmd_fuse(opt);
    }
    if (app.got_subcommand(eval)) {
      return cmd_eval(opt);
    }
    return cmd_pipeline(opt);
  } catch (const affuq::Error & e) {
    std::cerr << "affuq: " << e.what() << "\n";
    return 2;
  } catch (const std::exception & e) {
    std::cerr << "affuq: " << e.what() << "\n";
    return 1;
  }
}
