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

#include <cstddef>
#include <vector>

#include "affuq/core_model.hpp"

namespace affuq
{

enum class ClusterOrdering { kByConfidenceDesc, kByInputOrder };

/// Which mask a candidate detection is compared against.
enum class ClusterLinkage {
  kRepresentative,  ///< running pixel-wise mean of the member heatmaps
  kFirstMember,     ///< heatmap of the detection that opened the cluster
};

struct ClusteringConfig
{
  double iou_threshold{0.5};
  double bin_threshold{0.5};
  ClusterOrdering ordering{ClusterOrdering::kByConfidenceDesc};
  ClusterLinkage linkage{ClusterLinkage::kRepresentative};
  Resampling resampling{Resampling::kBilinear};
  /// Reject candidates whose sample_index is already present in the cluster,
  /// which keeps k <= M.
  bool one_per_pass{true};

  void validate() const;
};

struct ObservationCluster
{
  std::vector<Detection> members;
  std::vector<std::size_t> input_indices;  // position of each member in the clustered input
  int class_id{0};

  std::size_t k() const noexcept { return members.size(); }
};

/// Basic Sequential Algorithm Scheme over pooled detections of one frame.
///
/// Detections are visited in `cfg.ordering`. Each one joins the same-class
/// cluster whose linkage mask has the largest IoU with it, provided that IoU
/// exceeds `cfg.iou_threshold`; otherwise it opens a new cluster. Ties go to
/// the earliest-opened cluster. Empty input yields no clusters.
std::vector<ObservationCluster> cluster_bsas(
  const std::vector<Detection> & detections, const Extent & extent, const ClusteringConfig & cfg = {});

struct ClusterStats
{
  std::size_t k{0};
  double support_ratio{0.0};
};

/// k and k/M. Throws kConsistency for k == 0 or k > M.
ClusterStats cluster_stats(const ObservationCluster & cluster, std::size_t passes);

}  // namespace affuq
