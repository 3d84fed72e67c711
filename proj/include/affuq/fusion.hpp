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

#pragma once

#include <Eigen/Dense>

#include <cstddef>

#include "affuq/clustering.hpp"
#include "affuq/core_model.hpp"

namespace affuq
{

/// k x D matrix of sampled probability rows. Categorical rows (semantic) must
/// sum to one; Bernoulli rows (spatial, D = 1 per pixel) only need [0,1].
class SampleMatrix
{
public:
  enum class RowKind { kCategorical, kBernoulli };

  SampleMatrix(Eigen::MatrixXd rows, RowKind kind);

  const Eigen::MatrixXd & rows() const noexcept { return rows_; }
  Eigen::Index count() const noexcept { return rows_.rows(); }
  Eigen::Index dim() const noexcept { return rows_.cols(); }
  Eigen::VectorXd mean() const;

private:
  Eigen::MatrixXd rows_;
};

/// (1/k) sum_m (p_m - mean)(p_m - mean)^T
Eigen::MatrixXd epistemic_cov(const SampleMatrix & samples);

/// (1/k) sum_m diag(p_m) - p_m p_m^T
Eigen::MatrixXd aleatoric_cov(const SampleMatrix & samples);

/// epistemic_cov + aleatoric_cov.
Eigen::MatrixXd total_cov(const SampleMatrix & samples);

/// Closed form of the total: (1/k) sum_m diag(p_m) - mean mean^T.
Eigen::MatrixXd moment_cov(const SampleMatrix & samples);

enum class AveragingDenominator {
  kMemberCount,  ///< divide by k, the detections actually clustered
  kPassCount,    ///< divide by M; absent passes count as zero heatmaps
};

struct FusionConfig
{
  AveragingDenominator denominator{AveragingDenominator::kMemberCount};
  std::size_t passes{0};  // M; required for kPassCount
  Resampling resampling{Resampling::kBilinear};
};

/// Per-pixel spatial moments on the union footprint of the members.
struct SpatialUncertainty
{
  Patch mean;
  Patch epistemic;
  Patch aleatoric;
};

struct SemanticUncertainty
{
  Eigen::MatrixXd epistemic;
  Eigen::MatrixXd aleatoric;
  double epistemic_trace{0.0};
  double aleatoric_trace{0.0};
};

struct UncertaintyMaps
{
  Patch spatial_epistemic;
  Patch spatial_aleatoric;
  double semantic_epistemic{0.0};
  double semantic_aleatoric{0.0};
};

struct Observation
{
  BBox bbox_mean;
  ClassProbs class_probs_mean;
  ProbMask mask_mean;  // identity placement on the union footprint
  std::size_t k{0};
  UncertaintyMaps uncertainty;

  int class_id() const { return class_probs_mean.argmax(); }
  double semantic_variance() const { return uncertainty.semantic_epistemic + uncertainty.semantic_aleatoric; }
};

SpatialUncertainty spatial_uncertainty(
  const ObservationCluster & cluster, const Extent & extent, const FusionConfig & cfg = {});

SemanticUncertainty semantic_uncertainty(const ObservationCluster & cluster);

/// Averages the members into one observation. Boxes and class vectors are
/// always averaged over the k members; the heatmap and its spatial moments
/// follow `cfg.denominator`. Throws kConsistency on an empty cluster or when
/// kPassCount is requested with M < k.
Observation fuse(const ObservationCluster & cluster, const Extent & extent, const FusionConfig & cfg = {});

}  // namespace affuq
