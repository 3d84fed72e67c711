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

#include "affuq/clustering.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

namespace affuq
{

void ClusteringConfig::validate() const
{
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "iou_threshold must lie in (0,1)");
  }
  if (!(bin_threshold > 0.0 && bin_threshold < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "bin_threshold must lie in (0,1)");
  }
}

namespace
{

struct WorkingCluster
{
  ObservationCluster cluster;
  Patch sum;  // pixel-wise sum of member heatmaps
  Patch first;
};

void accumulate(Patch & sum, const Patch & add)
{
  const Window win = window_union(sum.window, add.window);
  if (win != sum.window) {
    sum = Patch{win, embed(sum, win)};
  }
  const Window & aw = add.window;
  for (int r = 0; r < aw.rows; ++r) {
    for (int c = 0; c < aw.cols; ++c) {
      sum.values(aw.row0 + r - win.row0, aw.col0 + c - win.col0) += add.values(r, c);
    }
  }
}

// IoU between `det` and the mean heatmap sum/count, both binarized.
double iou_with_mean(const Patch & det, const Patch & sum, double count, double bin_threshold)
{
  const Window span = window_union(det.window, sum.window);
  const double scaled = bin_threshold * count;
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (int r = span.row0; r < span.row0 + span.rows; ++r) {
    for (int c = span.col0; c < span.col0 + span.cols; ++c) {
      const bool fa = det.at_image(r, c) > bin_threshold;
      const bool fb = sum.at_image(r, c) > scaled;
      inter += (fa && fb) ? 1 : 0;
      uni += (fa || fb) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

std::vector<ObservationCluster> cluster_bsas(
  const std::vector<Detection> & detections, const Extent & extent, const ClusteringConfig & cfg)
{
  cfg.validate();
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg.ordering == ClusterOrdering::kByConfidenceDesc) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return detections[a].class_probs.max() > detections[b].class_probs.max();
    });
  }

  std::vector<WorkingCluster> working;
  for (std::size_t idx : order) {
    const Detection & det = detections[idx];
    const int cls = det.class_probs.argmax();
    const Patch patch = rasterize_patch(det.mask, extent, cfg.resampling);

    std::optional<std::size_t> best;
    double best_iou = 0.0;
    for (std::size_t ci = 0; ci < working.size(); ++ci) {
      const WorkingCluster & wc = working[ci];
      if (wc.cluster.class_id != cls) {
        continue;
      }
      if (cfg.one_per_pass && std::any_of(wc.cluster.members.begin(), wc.cluster.members.end(), [&](const Detection & m) {
            return m.sample_index == det.sample_index;
          })) {
        continue;
      }
      const double iou = cfg.linkage == ClusterLinkage::kRepresentative
                           ? iou_with_mean(patch, wc.sum, static_cast<double>(wc.cluster.k()), cfg.bin_threshold)
                           : patch_iou(patch, wc.first, cfg.bin_threshold);
      if (iou > cfg.iou_threshold && (!best || iou > best_iou)) {
        best = ci;
        best_iou = iou;
      }
    }

    if (best) {
      WorkingCluster & wc = working[*best];
      wc.cluster.members.push_back(det);
      wc.cluster.input_indices.push_back(idx);
      accumulate(wc.sum, patch);
    } else {
      WorkingCluster wc;
      wc.cluster.members.push_back(det);
      wc.cluster.input_indices.push_back(idx);
      wc.cluster.class_id = cls;
      wc.sum = patch;
      wc.first = patch;
      working.push_back(std::move(wc));
    }
  }

  std::vector<ObservationCluster> out;
  out.reserve(working.size());
  for (auto & wc : working) {
    out.push_back(std::move(wc.cluster));
  }
  return out;
}

ClusterStats cluster_stats(const ObservationCluster & cluster, std::size_t passes)
{
  const std::size_t k = cluster.k();
  if (k == 0) {
    throw Error(ErrorKind::kConsistency, "cluster has no members");
  }
  if (k > passes) {
    throw Error(
      ErrorKind::kConsistency,
      "cluster has " + std::to_string(k) + " members but only " + std::to_string(passes) + " passes");
  }
  return {k, static_cast<double>(k) / static_cast<double>(passes)};
}

}  // namespace affuq
