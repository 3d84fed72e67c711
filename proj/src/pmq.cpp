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

#include "affuq/pmq.hpp"

#include <cmath>

#include "affuq/assignment.hpp"

namespace affuq
{

double q_label(int gt_class, const ClassProbs & probs)
{
  if (gt_class < 0 || static_cast<std::size_t>(gt_class) >= probs.size()) {
    throw Error(
      ErrorKind::kClassMismatch,
      "ground-truth class " + std::to_string(gt_class) + " outside a " + std::to_string(probs.size()) +
        "-class probability vector");
  }
  return probs[static_cast<std::size_t>(gt_class)];
}

namespace
{

std::size_t checked_area(const BinaryMask & gt, const Grid & obs)
{
  if (gt.rows() != obs.rows() || gt.cols() != obs.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "ground-truth and observation grids differ in extent");
  }
  std::size_t area = 0;
  for (std::uint8_t v : gt.values()) {
    area += v != 0 ? 1 : 0;
  }
  if (area == 0) {
    throw Error(ErrorKind::kInvalidGroundTruth, "ground-truth mask is empty");
  }
  return area;
}

}  // namespace

double fg_loss(const BinaryMask & gt, const Grid & obs, double epsilon)
{
  const std::size_t area = checked_area(gt, obs);
  double sum = 0.0;
  const auto g = gt.values();
  const auto p = obs.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] != 0) {
      sum -= std::log(clamp_prob(p[i], epsilon));
    }
  }
  return sum / static_cast<double>(area);
}

double bg_loss(const BinaryMask & gt, const Grid & obs, double epsilon, double detection_floor)
{
  const std::size_t area = checked_area(gt, obs);
  double sum = 0.0;
  const auto g = gt.values();
  const auto p = obs.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0 && p[i] > detection_floor) {
      sum -= std::log(1.0 - clamp_prob(p[i], epsilon));
    }
  }
  return sum / static_cast<double>(area);
}

double q_spatial(const BinaryMask & gt, const Grid & obs, const PmqConfig & cfg)
{
  return std::exp(-(fg_loss(gt, obs, cfg.epsilon) + bg_loss(gt, obs, cfg.epsilon, cfg.detection_floor)));
}

double q_spatial(const GroundTruthInstance & gt, const Observation & obs, const Extent & extent, const PmqConfig & cfg)
{
  return q_spatial(gt.mask, rasterize(obs.mask_mean, extent, cfg.resampling), cfg);
}

double ppmq(double q_label, double q_spatial) { return std::sqrt(q_spatial * q_label); }

PairQuality PairwiseTable::at(std::size_t gt, std::size_t obs) const
{
  const auto i = static_cast<Eigen::Index>(gt);
  const auto j = static_cast<Eigen::Index>(obs);
  return {q_label(i, j), q_spatial(i, j), ppmq(i, j), gt, obs};
}

PairwiseTable pairwise_pmq(
  const std::vector<GroundTruthInstance> & gts, const std::vector<Observation> & observations, const Extent & extent,
  const PmqConfig & cfg)
{
  const auto n_gt = static_cast<Eigen::Index>(gts.size());
  const auto n_obs = static_cast<Eigen::Index>(observations.size());
  PairwiseTable table{
    Eigen::MatrixXd::Zero(n_gt, n_obs), Eigen::MatrixXd::Zero(n_gt, n_obs), Eigen::MatrixXd::Zero(n_gt, n_obs)};
  if (n_gt == 0 || n_obs == 0) {
    return table;
  }
  std::vector<Grid> rasters;
  rasters.reserve(observations.size());
  for (const Observation & o : observations) {
    rasters.push_back(rasterize(o.mask_mean, extent, cfg.resampling));
  }
  for (Eigen::Index i = 0; i < n_gt; ++i) {
    const GroundTruthInstance & gt = gts[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n_obs; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double ql = q_label(gt.class_id, observations[ju].class_probs_mean);
      const double qs = q_spatial(gt.mask, rasters[ju], cfg);
      table.q_label(i, j) = ql;
      table.q_spatial(i, j) = qs;
      table.ppmq(i, j) = ppmq(ql, qs);
    }
  }
  return table;
}

FrameAssignment assign_hungarian(const Eigen::MatrixXd & scores, double match_floor)
{
  FrameAssignment out;
  const std::vector<int> row_to_col = max_weight_assignment(scores);
  std::vector<char> obs_used(static_cast<std::size_t>(scores.cols()), 0);
  for (std::size_t i = 0; i < row_to_col.size(); ++i) {
    const int j = row_to_col[i];
    if (j < 0) {
      out.unmatched_gt.push_back(i);
      continue;
    }
    const double value = scores(static_cast<Eigen::Index>(i), j);
    if (value > match_floor) {
      out.matches.push_back({i, static_cast<std::size_t>(j), value, 0.0, 0.0, -1});
      out.q.push_back(value);
      obs_used[static_cast<std::size_t>(j)] = 1;
    } else {
      out.unmatched_gt.push_back(i);
    }
  }
  for (std::size_t j = 0; j < obs_used.size(); ++j) {
    if (!obs_used[j]) {
      out.unmatched_obs.push_back(j);
    }
  }
  out.n_tp = out.matches.size();
  out.n_fn = static_cast<std::size_t>(scores.rows()) - out.n_tp;
  out.n_fp = static_cast<std::size_t>(scores.cols()) - out.n_tp;
  return out;
}

FrameAssignment score_frame(
  const std::string & frame_id, const std::vector<GroundTruthInstance> & gts,
  const std::vector<Observation> & observations, const Extent & extent, const PmqConfig & cfg)
{
  const PairwiseTable table = pairwise_pmq(gts, observations, extent, cfg);
  FrameAssignment out = assign_hungarian(table.ppmq, cfg.match_floor);
  out.frame_id = frame_id;
  for (Match & m : out.matches) {
    const PairQuality pq = table.at(m.gt_index, m.obs_index);
    m.q_label = pq.q_label;
    m.q_spatial = pq.q_spatial;
    m.gt_class = gts[m.gt_index].class_id;
  }
  for (std::size_t i : out.unmatched_gt) {
    out.fn_classes.push_back(gts[i].class_id);
  }
  for (std::size_t j : out.unmatched_obs) {
    out.fp_classes.push_back(observations[j].class_id());
  }
  return out;
}

PMQResult aggregate_pmq(const std::vector<FrameAssignment> & frames)
{
  if (frames.empty()) {
    throw Error(ErrorKind::kUndefinedMetric, "PMQ needs at least one frame");
  }
  PMQResult out;
  out.frames = frames;
  double q_sum = 0.0;
  std::map<int, double> class_q, class_ql, class_qs;
  for (const FrameAssignment & f : frames) {
    out.tp += f.n_tp;
    out.fp += f.n_fp;
    out.fn += f.n_fn;
    for (double q : f.q) {
      q_sum += q;
    }
    for (const Match & m : f.matches) {
      if (m.gt_class < 0) {
        continue;
      }
      ClassPmq & c = out.per_class[m.gt_class];
      ++c.tp;
      class_q[m.gt_class] += m.ppmq;
      class_ql[m.gt_class] += m.q_label;
      class_qs[m.gt_class] += m.q_spatial;
    }
    for (int cls : f.fn_classes) {
      ++out.per_class[cls].fn;
    }
    for (int cls : f.fp_classes) {
      ++out.per_class[cls].fp;
    }
  }
  const std::size_t denom = out.tp + out.fp + out.fn;
  if (denom == 0) {
    throw Error(ErrorKind::kUndefinedMetric, "no ground truth and no observations in any frame");
  }
  out.pmq = q_sum / static_cast<double>(denom);
  out.mean_ppmq_over_tp = out.tp == 0 ? 0.0 : q_sum / static_cast<double>(out.tp);
  for (auto & [cls, c] : out.per_class) {
    const std::size_t n = c.tp + c.fp + c.fn;
    if (n > 0) {
      c.pmq = class_q[cls] / static_cast<double>(n);
    }
    if (c.tp > 0) {
      c.mean_q_label = class_ql[cls] / static_cast<double>(c.tp);
      c.mean_q_spatial = class_qs[cls] / static_cast<double>(c.tp);
    }
  }
  return out;
}

}  // namespace affuq
