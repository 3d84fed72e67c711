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
#include <optional>
#include <span>
#include <vector>

#include "affuq/core_model.hpp"

namespace affuq
{

struct CalibSample
{
  double confidence{0.0};
  bool correct{false};
  std::optional<ClassProbs> probs;
  std::optional<int> gt_class;
  double variance{0.0};
};

/// Expected calibration error over `n_bins` equal-width confidence bins.
/// Bins are [lo, hi) except the last, which also takes confidence 1.
/// Throws kUndefinedMetric for an empty sample set.
double ece(std::span<const CalibSample> samples, int n_bins = 10);

/// sum_c (p_c - [c == gt])^2, in [0, 2].
double brier(const ClassProbs & probs, int gt_class);

/// Squared error of a single foreground probability.
double spatial_brier(double pixel_prob, bool pixel_gt);

struct SparsificationConfig
{
  int n_steps{100};
  double f_max{0.99};
};

struct SparsificationCurve
{
  std::vector<double> fractions;
  std::vector<double> model_curve;   // removing by estimated variance
  std::vector<double> oracle_curve;  // removing by true error
  double ause{0.0};
};

/// Sparsification curves and AUSE.
///
/// At fraction f the ceil(f*N) items with the largest key are removed (at
/// most N-1 of them) and the mean error of the rest is recorded; ties go to
/// the lower input index first. Both curves are divided by the full mean
/// error, and AUSE is the trapezoidal area of model - oracle over the grid
/// divided by f_max.
SparsificationCurve sparsification(
  std::span<const double> errors, std::span<const double> variances, const SparsificationConfig & cfg = {});

/// Semantic entry: fused class vector, matched GT class, summed semantic variance.
struct SemanticRecord
{
  ClassProbs probs;
  int gt_class{0};
  double variance{0.0};
};

/// Spatial entry: one pixel that carries an estimated variance.
struct PixelRecord
{
  double prob{0.0};
  bool gt{false};
  double variance{0.0};
};

/// Brier error vs. variance sparsification; throws kUndefinedMetric below 2 records.
SparsificationCurve semantic_ause(std::span<const SemanticRecord> records, const SparsificationConfig & cfg = {});
SparsificationCurve spatial_ause(std::span<const PixelRecord> records, const SparsificationConfig & cfg = {});

/// Calibration samples: argmax confidence for semantic records, max(p, 1-p)
/// with a 0.5 decision threshold for pixels.
std::vector<CalibSample> semantic_calib_samples(std::span<const SemanticRecord> records);
std::vector<CalibSample> spatial_calib_samples(std::span<const PixelRecord> records);

}  // namespace affuq
