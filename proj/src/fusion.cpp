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

#include "affuq/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace affuq
{

SampleMatrix::SampleMatrix(Eigen::MatrixXd rows, RowKind kind) : rows_(std::move(rows))
{
  if (rows_.rows() < 1 || rows_.cols() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "sample matrix needs at least one row and column");
  }
  if ((rows_.array() < 0.0).any() || (rows_.array() > 1.0).any() || !rows_.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "sample probabilities must lie in [0,1]");
  }
  if (kind == RowKind::kCategorical) {
    for (Eigen::Index m = 0; m < rows_.rows(); ++m) {
      if (std::abs(rows_.row(m).sum() - 1.0) > ClassProbs::kSumTolerance) {
        throw Error(ErrorKind::kInvalidArgument, "categorical sample row does not sum to 1");
      }
    }
  }
}

Eigen::VectorXd SampleMatrix::mean() const { return rows_.colwise().mean().transpose(); }

Eigen::MatrixXd epistemic_cov(const SampleMatrix & samples)
{
  const Eigen::MatrixXd centered = samples.rows().rowwise() - samples.mean().transpose();
  return (centered.transpose() * centered) / static_cast<double>(samples.count());
}

Eigen::MatrixXd aleatoric_cov(const SampleMatrix & samples)
{
  const Eigen::MatrixXd & p = samples.rows();
  const Eigen::VectorXd mean = samples.mean();
  Eigen::MatrixXd out = mean.asDiagonal();
  out -= (p.transpose() * p) / static_cast<double>(samples.count());
  return out;
}

Eigen::MatrixXd total_cov(const SampleMatrix & samples) { return epistemic_cov(samples) + aleatoric_cov(samples); }

Eigen::MatrixXd moment_cov(const SampleMatrix & samples)
{
  const Eigen::VectorXd mean = samples.mean();
  Eigen::MatrixXd out = mean.asDiagonal();
  out -= mean * mean.transpose();
  return out;
}

namespace
{

std::size_t denominator_for(const ObservationCluster & cluster, const FusionConfig & cfg)
{
  const std::size_t k = cluster.k();
  if (k == 0) {
    throw Error(ErrorKind::kConsistency, "cannot fuse an empty cluster");
  }
  if (cfg.denominator == AveragingDenominator::kMemberCount) {
    return k;
  }
  if (cfg.passes < k) {
    throw Error(ErrorKind::kConsistency, "pass-count averaging needs M >= k");
  }
  return cfg.passes;
}

}  // namespace

SpatialUncertainty spatial_uncertainty(const ObservationCluster & cluster, const Extent & extent, const FusionConfig & cfg)
{
  const std::size_t n = denominator_for(cluster, cfg);
  std::vector<Patch> patches;
  patches.reserve(cluster.k());
  Window win{};
  for (const Detection & d : cluster.members) {
    patches.push_back(rasterize_patch(d.mask, extent, cfg.resampling));
    win = window_union(win, patches.back().window);
  }
  if (win.empty()) {
    win = Window{win.row0, win.col0, 0, 0};
  }

  SpatialUncertainty out{
    {win, Grid(win.rows, win.cols)}, {win, Grid(win.rows, win.cols)}, {win, Grid(win.rows, win.cols)}};
  const double inv_n = 1.0 / static_cast<double>(n);
  const double absent = static_cast<double>(n - cluster.k());
  for (int r = 0; r < win.rows; ++r) {
    for (int c = 0; c < win.cols; ++c) {
      const int ir = win.row0 + r;
      const int ic = win.col0 + c;
      double sum = 0.0;
      double alea = 0.0;
      for (const Patch & p : patches) {
        const double v = p.at_image(ir, ic);
        sum += v;
        alea += v * (1.0 - v);
      }
      const double mean = sum * inv_n;
      double epi = absent * mean * mean;
      for (const Patch & p : patches) {
        const double d = p.at_image(ir, ic) - mean;
        epi += d * d;
      }
      out.mean.values(r, c) = mean;
      out.epistemic.values(r, c) = epi * inv_n;
      out.aleatoric.values(r, c) = alea * inv_n;
    }
  }
  return out;
}

SemanticUncertainty semantic_uncertainty(const ObservationCluster & cluster)
{
  if (cluster.k() == 0) {
    throw Error(ErrorKind::kConsistency, "cannot summarize an empty cluster");
  }
  const auto dim = static_cast<Eigen::Index>(cluster.members.front().class_probs.size());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(cluster.k()), dim);
  for (std::size_t m = 0; m < cluster.k(); ++m) {
    const ClassProbs & p = cluster.members[m].class_probs;
    if (static_cast<Eigen::Index>(p.size()) != dim) {
      throw Error(ErrorKind::kConsistency, "cluster members disagree on class count");
    }
    for (Eigen::Index c = 0; c < dim; ++c) {
      rows(static_cast<Eigen::Index>(m), c) = p[static_cast<std::size_t>(c)];
    }
  }
  const SampleMatrix samples(std::move(rows), SampleMatrix::RowKind::kCategorical);
  SemanticUncertainty out;
  out.epistemic = epistemic_cov(samples);
  out.aleatoric = aleatoric_cov(samples);
  // Roundoff can leave -1e-17 on a zero diagonal.
  out.epistemic_trace = std::max(0.0, out.epistemic.trace());
  out.aleatoric_trace = std::max(0.0, out.aleatoric.trace());
  return out;
}

Observation fuse(const ObservationCluster & cluster, const Extent & extent, const FusionConfig & cfg)
{
  SpatialUncertainty spatial = spatial_uncertainty(cluster, extent, cfg);
  const SemanticUncertainty semantic = semantic_uncertainty(cluster);

  const double inv_k = 1.0 / static_cast<double>(cluster.k());
  BBox box{};
  std::vector<double> probs(cluster.members.front().class_probs.size(), 0.0);
  for (const Detection & d : cluster.members) {
    box.x += d.bbox.x;
    box.y += d.bbox.y;
    box.w += d.bbox.w;
    box.h += d.bbox.h;
    for (std::size_t c = 0; c < probs.size(); ++c) {
      probs[c] += d.class_probs[c];
    }
  }
  box = {box.x * inv_k, box.y * inv_k, box.w * inv_k, box.h * inv_k};
  for (double & p : probs) {
    p = std::clamp(p * inv_k, 0.0, 1.0);
  }

  Observation obs;
  obs.bbox_mean = box;
  obs.class_probs_mean = ClassProbs(std::move(probs));
  const Window & win = spatial.mean.window;
  obs.mask_mean = ProbMask{win.row0, win.col0, win.rows, win.cols, std::move(spatial.mean.values)};
  obs.k = cluster.k();
  obs.uncertainty.spatial_epistemic = std::move(spatial.epistemic);
  obs.uncertainty.spatial_aleatoric = std::move(spatial.aleatoric);
  obs.uncertainty.semantic_epistemic = semantic.epistemic_trace;
  obs.uncertainty.semantic_aleatoric = semantic.aleatoric_trace;
  return obs;
}

}  // namespace affuq
