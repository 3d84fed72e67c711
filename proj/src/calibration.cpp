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

#include "affuq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace affuq
{

double ece(std::span<const CalibSample> samples, int n_bins)
{
  if (n_bins < 1) {
    throw Error(ErrorKind::kInvalidArgument, "ECE needs at least one bin");
  }
  if (samples.empty()) {
    throw Error(ErrorKind::kUndefinedMetric, "ECE of an empty sample set");
  }
  std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> correct(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
  for (const CalibSample & s : samples) {
    if (!(s.confidence >= 0.0 && s.confidence <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "confidence outside [0,1]");
    }
    const auto bin = static_cast<std::size_t>(
      std::min(static_cast<int>(std::floor(s.confidence * n_bins)), n_bins - 1));
    conf_sum[bin] += s.confidence;
    correct[bin] += s.correct ? 1.0 : 0.0;
    ++count[bin];
  }
  const auto total = static_cast<double>(samples.size());
  double out = 0.0;
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) {
      continue;
    }
    const auto n = static_cast<double>(count[b]);
    out += (n / total) * std::abs(correct[b] / n - conf_sum[b] / n);
  }
  return out;
}

double brier(const ClassProbs & probs, int gt_class)
{
  if (gt_class < 0 || static_cast<std::size_t>(gt_class) >= probs.size()) {
    throw Error(ErrorKind::kClassMismatch, "Brier ground-truth class out of range");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double target = static_cast<int>(c) == gt_class ? 1.0 : 0.0;
    sum += (probs[c] - target) * (probs[c] - target);
  }
  return sum;
}

double spatial_brier(double pixel_prob, bool pixel_gt)
{
  const double d = pixel_prob - (pixel_gt ? 1.0 : 0.0);
  return d * d;
}

namespace
{

// Mean error left after dropping the top-`removed[i]` items under `order`.
std::vector<double> remaining_means(
  std::span<const double> errors, const std::vector<std::size_t> & order, const std::vector<std::size_t> & removed)
{
  std::vector<double> prefix(order.size() + 1, 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    prefix[i + 1] = prefix[i] + errors[order[i]];
  }
  std::vector<double> out;
  out.reserve(removed.size());
  for (std::size_t r : removed) {
    const double rest = prefix.back() - prefix[r];
    out.push_back(rest / static_cast<double>(order.size() - r));
  }
  return out;
}

std::vector<std::size_t> descending_order(std::span<const double> key)
{
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

}  // namespace

SparsificationCurve sparsification(
  std::span<const double> errors, std::span<const double> variances, const SparsificationConfig & cfg)
{
  if (errors.empty() || errors.size() != variances.size()) {
    throw Error(ErrorKind::kInvalidArgument, "sparsification needs equal-length non-empty vectors");
  }
  if (cfg.n_steps < 2 || !(cfg.f_max > 0.0 && cfg.f_max <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "sparsification needs n_steps >= 2 and f_max in (0,1]");
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] >= 0.0) || !(variances[i] >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "errors and variances must be non-negative");
    }
  }
  const std::size_t n = errors.size();
  const double base = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(n);
  if (!(base > 0.0)) {
    throw Error(ErrorKind::kUndefinedMetric, "all errors are zero, curves cannot be normalized");
  }

  SparsificationCurve curve;
  std::vector<std::size_t> removed;
  for (int i = 0; i < cfg.n_steps; ++i) {
    const double f = cfg.f_max * static_cast<double>(i) / static_cast<double>(cfg.n_steps - 1);
    curve.fractions.push_back(f);
    // The 1e-9 slack keeps e.g. 0.1 * 30 from rounding up to 4.
    const auto r = static_cast<std::size_t>(std::max(0.0, std::ceil(f * static_cast<double>(n) - 1e-9)));
    removed.push_back(std::min(r, n - 1));
  }
  const std::vector<double> model = remaining_means(errors, descending_order(variances), removed);
  const std::vector<double> oracle = remaining_means(errors, descending_order(errors), removed);

  double area = 0.0;
  for (std::size_t i = 0; i < removed.size(); ++i) {
    curve.model_curve.push_back(model[i] / base);
    curve.oracle_curve.push_back(oracle[i] / base);
    if (i > 0) {
      const double gap_prev = curve.model_curve[i - 1] - curve.oracle_curve[i - 1];
      const double gap = curve.model_curve[i] - curve.oracle_curve[i];
      area += 0.5 * (gap_prev + gap) * (curve.fractions[i] - curve.fractions[i - 1]);
    }
  }
  curve.ause = area / cfg.f_max;
  return curve;
}

SparsificationCurve semantic_ause(std::span<const SemanticRecord> records, const SparsificationConfig & cfg)
{
  if (records.size() < 2) {
    throw Error(ErrorKind::kUndefinedMetric, "semantic AUSE needs at least two matched detections");
  }
  std::vector<double> errors;
  std::vector<double> variances;
  errors.reserve(records.size());
  variances.reserve(records.size());
  for (const SemanticRecord & r : records) {
    errors.push_back(brier(r.probs, r.gt_class));
    variances.push_back(r.variance);
  }
  return sparsification(errors, variances, cfg);
}

SparsificationCurve spatial_ause(std::span<const PixelRecord> records, const SparsificationConfig & cfg)
{
  if (records.size() < 2) {
    throw Error(ErrorKind::kUndefinedMetric, "spatial AUSE needs at least two pixels");
  }
  std::vector<double> errors;
  std::vector<double> variances;
  errors.reserve(records.size());
  variances.reserve(records.size());
  for (const PixelRecord & r : records) {
    errors.push_back(spatial_brier(r.prob, r.gt));
    variances.push_back(r.variance);
  }
  return sparsification(errors, variances, cfg);
}

std::vector<CalibSample> semantic_calib_samples(std::span<const SemanticRecord> records)
{
  std::vector<CalibSample> out;
  out.reserve(records.size());
  for (const SemanticRecord & r : records) {
    out.push_back({r.probs.max(), r.probs.argmax() == r.gt_class, r.probs, r.gt_class, r.variance});
  }
  return out;
}

std::vector<CalibSample> spatial_calib_samples(std::span<const PixelRecord> records)
{
  std::vector<CalibSample> out;
  out.reserve(records.size());
  for (const PixelRecord & r : records) {
    const bool predicted_fg = r.prob > 0.5;
    out.push_back({predicted_fg ? r.prob : 1.0 - r.prob, predicted_fg == r.gt, std::nullopt, std::nullopt, r.variance});
  }
  return out;
}

}  // namespace affuq
