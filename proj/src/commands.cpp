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

#include "affuq/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "affuq/clustering.hpp"
#include "affuq/fusion.hpp"

namespace affuq
{

using nlohmann::json;

ObservationSet run_fuse(const Dataset & dataset, const FuseSettings & settings, const json & source)
{
  settings.clustering.validate();
  ObservationSet set;
  set.classes = dataset.classes;
  set.background_class = dataset.background_class;
  set.extent = dataset.extent;
  set.settings = settings;
  set.source = source;
  for (const Frame & frame : dataset.frames) {
    if (frame.passes.empty()) {
      throw Error(ErrorKind::kSchema, "frame '" + frame.frame_id + "' has no passes");
    }
    FrameObservations fo;
    fo.frame_id = frame.frame_id;
    fo.passes = frame.passes.size();
    FusionConfig fusion = settings.fusion;
    fusion.passes = fo.passes;
    for (const ObservationCluster & cluster : cluster_bsas(frame.pooled_detections(), frame.extent, settings.clustering)) {
      fo.observations.push_back(fuse(cluster, frame.extent, fusion));
    }
    set.frames.push_back(std::move(fo));
  }
  return set;
}

namespace
{

json number_or_null(const std::optional<double> & v) { return v ? json(round_sig9(*v)) : json(nullptr); }

template <typename F>
std::optional<double> defined_or_empty(F && f)
{
  try {
    return f();
  } catch (const Error & e) {
    if (e.kind() == ErrorKind::kUndefinedMetric) {
      return std::nullopt;
    }
    throw;
  }
}

void check_alignment(const ObservationSet & obs, const Dataset & truth)
{
  if (obs.extent != truth.extent) {
    throw Error(ErrorKind::kAlignment, "observation and ground-truth image extents differ");
  }
  if (obs.prob_dim() != truth.prob_dim()) {
    throw Error(ErrorKind::kAlignment, "observation and ground-truth class counts differ");
  }
  std::vector<std::string> a;
  std::vector<std::string> b;
  for (const auto & f : obs.frames) {
    a.push_back(f.frame_id);
  }
  for (const auto & f : truth.frames) {
    b.push_back(f.frame_id);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::string> only_obs;
  std::vector<std::string> only_gt;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_obs));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_gt));
  if (only_obs.empty() && only_gt.empty()) {
    return;
  }
  std::string msg = "frame ids do not align;";
  auto list = [&](const char * label, const std::vector<std::string> & ids) {
    if (ids.empty()) {
      return;
    }
    msg += std::string(" ") + label + ":";
    for (const auto & id : ids) {
      msg += " " + id;
    }
    msg += ";";
  };
  list("missing from ground truth", only_obs);
  list("missing from observations", only_gt);
  throw Error(ErrorKind::kAlignment, msg);
}

std::string class_name(const std::vector<std::string> & classes, int id)
{
  if (id >= 0 && static_cast<std::size_t>(id) < classes.size()) {
    return classes[static_cast<std::size_t>(id)];
  }
  return "background";
}

template <typename Fn>
void for_each_match(const ObservationSet & observations, const Dataset & truth, const PMQResult & pmq, Fn && fn)
{
  std::map<std::string, const FrameObservations *> obs_by_id;
  for (const auto & f : observations.frames) {
    obs_by_id[f.frame_id] = &f;
  }
  std::map<std::string, const Frame *> gt_by_id;
  for (const auto & f : truth.frames) {
    gt_by_id[f.frame_id] = &f;
  }
  for (const FrameAssignment & fa : pmq.frames) {
    const FrameObservations & fo = *obs_by_id.at(fa.frame_id);
    const Frame & fr = *gt_by_id.at(fa.frame_id);
    for (const Match & m : fa.matches) {
      fn(fa.frame_id, m, fr.ground_truth[m.gt_index], fo.observations[m.obs_index]);
    }
  }
}

}  // namespace

std::vector<MatchedPixel> matched_pixels(const ObservationSet & observations, const Dataset & truth, const EvalOutcome & outcome)
{
  std::vector<MatchedPixel> out;
  for_each_match(
    observations, truth, outcome.pmq,
    [&](const std::string & frame_id, const Match & m, const GroundTruthInstance & gt, const Observation & o) {
      const Window win = window_intersection(o.mask_mean.footprint(), full_window(truth.extent));
      for (int r = win.row0; r < win.row0 + win.rows; ++r) {
        for (int c = win.col0; c < win.col0 + win.cols; ++c) {
          const int lr = r - o.mask_mean.origin_row;
          const int lc = c - o.mask_mean.origin_col;
          const double epi = o.uncertainty.spatial_epistemic.values(lr, lc);
          const double alea = o.uncertainty.spatial_aleatoric.values(lr, lc);
          out.push_back(
            {frame_id, m.gt_index, r, c, PixelRecord{o.mask_mean.grid(lr, lc), gt.mask(r, c) != 0, epi + alea}, alea, epi});
        }
      }
    });
  return out;
}

EvalOutcome run_eval(const ObservationSet & observations, const DatasetDocument & truth_doc, const EvalSettings & settings)
{
  const Dataset & truth = truth_doc.dataset;
  check_alignment(observations, truth);

  std::map<std::string, const FrameObservations *> obs_by_id;
  for (const auto & f : observations.frames) {
    obs_by_id[f.frame_id] = &f;
  }
  std::vector<const Frame *> frames;
  for (const auto & f : truth.frames) {
    frames.push_back(&f);
  }
  std::sort(frames.begin(), frames.end(), [](const Frame * a, const Frame * b) { return a->frame_id < b->frame_id; });

  std::vector<FrameAssignment> assignments;
  for (const Frame * f : frames) {
    assignments.push_back(
      score_frame(f->frame_id, f->ground_truth, obs_by_id.at(f->frame_id)->observations, truth.extent, settings.pmq));
  }

  EvalOutcome out;
  out.pmq = aggregate_pmq(assignments);
  for_each_match(
    observations, truth, out.pmq,
    [&](const std::string &, const Match &, const GroundTruthInstance & gt, const Observation & o) {
      out.semantic.push_back({o.class_probs_mean, gt.class_id, o.semantic_variance()});
    });
  for (const MatchedPixel & px : matched_pixels(observations, truth, out)) {
    out.spatial.push_back(px.record);
  }

  out.semantic_curve = [&]() -> std::optional<SparsificationCurve> {
    try {
      return semantic_ause(out.semantic, settings.sparsification);
    } catch (const Error & e) {
      if (e.kind() == ErrorKind::kUndefinedMetric) {
        return std::nullopt;
      }
      throw;
    }
  }();
  out.spatial_curve = [&]() -> std::optional<SparsificationCurve> {
    try {
      return spatial_ause(out.spatial, settings.sparsification);
    } catch (const Error & e) {
      if (e.kind() == ErrorKind::kUndefinedMetric) {
        return std::nullopt;
      }
      throw;
    }
  }();

  const auto semantic_samples = semantic_calib_samples(out.semantic);
  const auto spatial_samples = spatial_calib_samples(out.spatial);
  const std::optional<double> sem_ece = defined_or_empty([&] { return ece(semantic_samples, settings.n_bins); });
  const std::optional<double> sp_ece = defined_or_empty([&] { return ece(spatial_samples, settings.n_bins); });
  std::optional<double> sem_brier;
  if (!out.semantic.empty()) {
    double sum = 0.0;
    for (const auto & r : out.semantic) {
      sum += brier(r.probs, r.gt_class);
    }
    sem_brier = sum / static_cast<double>(out.semantic.size());
  }
  std::optional<double> sp_brier;
  if (!out.spatial.empty()) {
    double sum = 0.0;
    for (const auto & r : out.spatial) {
      sum += spatial_brier(r.prob, r.gt);
    }
    sp_brier = sum / static_cast<double>(out.spatial.size());
  }

  json per_class = json::object();
  for (const auto & [cls, c] : out.pmq.per_class) {
    per_class[class_name(truth.classes, cls)] = {
      {"pmq", number_or_null(c.pmq)},
      {"mean_q_label", round_sig9(c.mean_q_label)},
      {"mean_q_spatial", round_sig9(c.mean_q_spatial)},
      {"tp", c.tp},
      {"fp", c.fp},
      {"fn", c.fn}};
  }
  out.report = {
    {"pmq", round_sig9(out.pmq.pmq)},
    {"mean_ppmq", round_sig9(out.pmq.mean_ppmq_over_tp)},
    {"per_class", per_class},
    {"semantic",
     {{"ece", number_or_null(sem_ece)},
      {"ause", number_or_null(out.semantic_curve ? std::optional(out.semantic_curve->ause) : std::nullopt)},
      {"brier_mean", number_or_null(sem_brier)},
      {"n_samples", out.semantic.size()},
      {"n_unmatched", out.pmq.fp}}},
    {"spatial",
     {{"ece", number_or_null(sp_ece)},
      {"ause", number_or_null(out.spatial_curve ? std::optional(out.spatial_curve->ause) : std::nullopt)},
      {"brier_mean", number_or_null(sp_brier)},
      {"n_pixels", out.spatial.size()}}},
    {"counts", {{"tp", out.pmq.tp}, {"fp", out.pmq.fp}, {"fn", out.pmq.fn}, {"frames", frames.size()}}},
    {"config_echo",
     {{"fuse", fuse_settings_to_json(observations.settings)},
      {"eval", eval_settings_to_json(settings)},
      {"source", truth_doc.generator}}}};
  return out;
}

std::string curve_csv(const SparsificationCurve & curve)
{
  std::string out = "fraction,model,oracle\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", curve.fractions[i], curve.model_curve[i], curve.oracle_curve[i]);
    out += buf;
  }
  return out;
}

PipelineArtifacts run_pipeline(const SimConfig & sim, const FuseSettings & fuse, const EvalSettings & eval)
{
  PipelineArtifacts art;
  const Dataset simulated = simulate_dataset(sim);
  art.dataset_json = dump_compact(dataset_to_json(simulated, sim_config_to_json(sim)));

  const DatasetDocument doc = dataset_from_json(parse_json_text(art.dataset_json, "<dataset>"));
  const ObservationSet fused = run_fuse(doc.dataset, fuse, doc.generator);
  art.observations_json = dump_compact(observations_to_json(fused));

  const ObservationSet reread = observations_from_json(parse_json_text(art.observations_json, "<observations>"));
  art.outcome = run_eval(reread, doc, eval);
  art.report_json = dump_pretty(art.outcome.report);
  if (art.outcome.semantic_curve) {
    art.semantic_csv = curve_csv(*art.outcome.semantic_curve);
  }
  if (art.outcome.spatial_curve) {
    art.spatial_csv = curve_csv(*art.outcome.spatial_curve);
  }
  return art;
}

}  // namespace affuq
