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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affuq/core_model.hpp"
#include "affuq/fusion.hpp"

namespace affuq
{

struct PmqConfig
{
  double epsilon{1e-7};          // probability clamp inside the logs
  double detection_floor{1e-3};  // a pixel is "detected" when its probability exceeds this
  double match_floor{1e-12};     // assignments at or below this pPMQ are not true positives
  Resampling resampling{Resampling::kBilinear};
};

/// Probability the observation gives to the ground-truth class.
/// Throws kClassMismatch when `gt_class` is not an index of `probs`.
double q_label(int gt_class, const ClassProbs & probs);

/// Mean -log p over ground-truth pixels. `obs` is an image-frame grid with
/// the extent of `gt`. Throws kInvalidGroundTruth on an empty mask.
double fg_loss(const BinaryMask & gt, const Grid & obs, double epsilon = 1e-7);

/// -log(1-p) summed over detected pixels outside the ground truth, divided by
/// the ground-truth area.
double bg_loss(const BinaryMask & gt, const Grid & obs, double epsilon = 1e-7, double detection_floor = 1e-3);

/// exp(-(fg_loss + bg_loss)).
double q_spatial(const BinaryMask & gt, const Grid & obs, const PmqConfig & cfg = {});
double q_spatial(
  const GroundTruthInstance & gt, const Observation & obs, const Extent & extent, const PmqConfig & cfg = {});

struct PairQuality
{
  double q_label{0.0};
  double q_spatial{0.0};
  double ppmq{0.0};
  std::size_t gt_index{0};
  std::size_t obs_index{0};
};

/// sqrt(q_spatial * q_label)
double ppmq(double q_label, double q_spatial);

/// Dense |gts| x |observations| tables of Q_L, Q_S and pPMQ.
struct PairwiseTable
{
  Eigen::MatrixXd q_label;
  Eigen::MatrixXd q_spatial;
  Eigen::MatrixXd ppmq;

  PairQuality at(std::size_t gt, std::size_t obs) const;
};

PairwiseTable pairwise_pmq(
  const std::vector<GroundTruthInstance> & gts, const std::vector<Observation> & observations, const Extent & extent,
  const PmqConfig & cfg = {});

struct Match
{
  std::size_t gt_index{0};
  std::size_t obs_index{0};
  double ppmq{0.0};
  double q_label{0.0};
  double q_spatial{0.0};
  int gt_class{-1};
};

struct FrameAssignment
{
  std::string frame_id;
  std::vector<Match> matches;
  std::size_t n_tp{0};
  std::size_t n_fp{0};
  std::size_t n_fn{0};
  std::vector<double> q;  // pPMQ of every true positive
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_obs;
  std::vector<int> fn_classes;  // ground-truth class of every false negative
  std::vector<int> fp_classes;  // argmax class of every false positive
};

/// Optimal GT/observation assignment on a pPMQ matrix (rows are ground truth).
/// Matches with pPMQ <= match_floor are dropped: the GT becomes a false
/// negative and the observation a false positive.
FrameAssignment assign_hungarian(const Eigen::MatrixXd & ppmq, double match_floor = 1e-12);

/// pairwise_pmq + assign_hungarian, with class bookkeeping for per-class PMQ.
FrameAssignment score_frame(
  const std::string & frame_id, const std::vector<GroundTruthInstance> & gts,
  const std::vector<Observation> & observations, const Extent & extent, const PmqConfig & cfg = {});

struct ClassPmq
{
  std::optional<double> pmq;  // empty when the class never occurs
  double mean_q_label{0.0};
  double mean_q_spatial{0.0};
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t fn{0};
};

struct PMQResult
{
  double pmq{0.0};
  double mean_ppmq_over_tp{0.0};
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t fn{0};
  std::vector<FrameAssignment> frames;
  std::map<int, ClassPmq> per_class;
};

/// Sum of true-positive pPMQ over all frames divided by total TP+FP+FN.
/// Throws kUndefinedMetric when that total is zero or `frames` is empty.
PMQResult aggregate_pmq(const std::vector<FrameAssignment> & frames);

}  // namespace affuq
