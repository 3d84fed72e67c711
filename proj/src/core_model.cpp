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

#include "affuq/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace affuq
{

BBox clip_bbox(const BBox & box, const Extent & extent)
{
  if (!std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw Error(ErrorKind::kInvalidArgument, "bounding box has non-finite coordinates");
  }
  const double x0 = std::max(0.0, box.x);
  const double y0 = std::max(0.0, box.y);
  const double x1 = std::min(static_cast<double>(extent.cols), box.x + box.w);
  const double y1 = std::min(static_cast<double>(extent.rows), box.y + box.h);
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorKind::kInvalidArgument, "bounding box has no area inside the image");
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

Window window_union(const Window & a, const Window & b)
{
  if (a.empty()) {
    return b;
  }
  if (b.empty()) {
    return a;
  }
  const int r0 = std::min(a.row0, b.row0);
  const int c0 = std::min(a.col0, b.col0);
  const int r1 = std::max(a.row0 + a.rows, b.row0 + b.rows);
  const int c1 = std::max(a.col0 + a.cols, b.col0 + b.cols);
  return {r0, c0, r1 - r0, c1 - c0};
}

Window window_intersection(const Window & a, const Window & b)
{
  const int r0 = std::max(a.row0, b.row0);
  const int c0 = std::max(a.col0, b.col0);
  const int r1 = std::min(a.row0 + a.rows, b.row0 + b.rows);
  const int c1 = std::min(a.col0 + a.cols, b.col0 + b.cols);
  if (r1 <= r0 || c1 <= c0) {
    return {r0, c0, 0, 0};
  }
  return {r0, c0, r1 - r0, c1 - c0};
}

Window full_window(const Extent & extent) { return {0, 0, extent.rows, extent.cols}; }

ClassProbs::ClassProbs(std::vector<double> probs) : probs_(std::move(probs))
{
  if (probs_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "class probability vector is empty");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "class probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorKind::kInvalidArgument, "class probabilities sum to " + std::to_string(sum));
  }
}

int ClassProbs::argmax() const
{
  return static_cast<int>(std::distance(probs_.begin(), std::max_element(probs_.begin(), probs_.end())));
}

double ClassProbs::max() const { return *std::max_element(probs_.begin(), probs_.end()); }

ProbMask ProbMask::identity(int origin_row, int origin_col, Grid grid)
{
  ProbMask mask{origin_row, origin_col, grid.rows(), grid.cols(), std::move(grid)};
  mask.validate();
  return mask;
}

void ProbMask::validate() const
{
  if (footprint_rows < 0 || footprint_cols < 0) {
    throw Error(ErrorKind::kInvalidArgument, "negative mask footprint");
  }
  const bool empty_footprint = footprint_rows == 0 || footprint_cols == 0;
  if (!empty_footprint && grid.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "mask footprint is non-empty but heatmap has no values");
  }
  for (double v : grid.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "heatmap value outside [0,1]");
    }
  }
}

std::size_t GroundTruthInstance::area() const
{
  return static_cast<std::size_t>(std::count_if(
    mask.values().begin(), mask.values().end(), [](std::uint8_t v) { return v != 0; }));
}

void GroundTruthInstance::validate(std::size_t n_classes) const
{
  if (area() == 0) {
    throw Error(ErrorKind::kInvalidGroundTruth, "ground-truth mask has no foreground pixel");
  }
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= n_classes) {
    throw Error(ErrorKind::kInvalidGroundTruth, "ground-truth class id out of range");
  }
}

std::vector<Detection> Frame::pooled_detections() const
{
  std::vector<Detection> pooled;
  for (const auto & pass : passes) {
    pooled.insert(pooled.end(), pass.begin(), pass.end());
  }
  return pooled;
}

namespace
{

// Source coordinate of destination pixel `i` when `src` samples cover `dst` pixels.
double source_coord(int i, int src, int dst)
{
  return (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
}

double sample(const ProbMask & mask, int lr, int lc, Resampling policy)
{
  const Grid & g = mask.grid;
  if (g.rows() == mask.footprint_rows && g.cols() == mask.footprint_cols) {
    return g(lr, lc);
  }
  if (policy == Resampling::kNearest) {
    const int sr = std::clamp(
      static_cast<int>(std::floor((lr + 0.5) * g.rows() / mask.footprint_rows)), 0, g.rows() - 1);
    const int sc = std::clamp(
      static_cast<int>(std::floor((lc + 0.5) * g.cols() / mask.footprint_cols)), 0, g.cols() - 1);
    return g(sr, sc);
  }
  const double sy = std::clamp(source_coord(lr, g.rows(), mask.footprint_rows), 0.0, g.rows() - 1.0);
  const double sx = std::clamp(source_coord(lc, g.cols(), mask.footprint_cols), 0.0, g.cols() - 1.0);
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y1 = std::min(y0 + 1, g.rows() - 1);
  const int x1 = std::min(x0 + 1, g.cols() - 1);
  const double ty = sy - y0;
  const double tx = sx - x0;
  const double top = g(y0, x0) * (1.0 - tx) + g(y0, x1) * tx;
  const double bottom = g(y1, x0) * (1.0 - tx) + g(y1, x1) * tx;
  return top * (1.0 - ty) + bottom * ty;
}

}  // namespace

Patch rasterize_patch(const ProbMask & mask, const Extent & extent, Resampling policy)
{
  if (!extent.valid()) {
    throw Error(ErrorKind::kInvalidExtent, "extent must have positive rows and cols");
  }
  const Window win = window_intersection(mask.footprint(), full_window(extent));
  if (win.empty()) {
    return {Window{win.row0, win.col0, 0, 0}, Grid{}};
  }
  Patch patch{win, Grid(win.rows, win.cols)};
  for (int r = 0; r < win.rows; ++r) {
    for (int c = 0; c < win.cols; ++c) {
      const int lr = win.row0 + r - mask.origin_row;
      const int lc = win.col0 + c - mask.origin_col;
      patch.values(r, c) = sample(mask, lr, lc, policy);
    }
  }
  return patch;
}

Grid embed(const Patch & patch, const Window & window)
{
  Grid out(window.rows, window.cols);
  const Window overlap = window_intersection(patch.window, window);
  for (int r = overlap.row0; r < overlap.row0 + overlap.rows; ++r) {
    for (int c = overlap.col0; c < overlap.col0 + overlap.cols; ++c) {
      out(r - window.row0, c - window.col0) = patch.values(r - patch.window.row0, c - patch.window.col0);
    }
  }
  return out;
}

Grid rasterize(const ProbMask & mask, const Extent & extent, Resampling policy)
{
  return embed(rasterize_patch(mask, extent, policy), full_window(extent));
}

double patch_iou(const Patch & a, const Patch & b, double bin_threshold)
{
  const Window span = window_union(a.window, b.window);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (int r = span.row0; r < span.row0 + span.rows; ++r) {
    for (int c = span.col0; c < span.col0 + span.cols; ++c) {
      const bool fa = a.at_image(r, c) > bin_threshold;
      const bool fb = b.at_image(r, c) > bin_threshold;
      inter += (fa && fb) ? 1 : 0;
      uni += (fa || fb) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_iou(const ProbMask & a, const ProbMask & b, const Extent & extent, double bin_threshold, Resampling policy)
{
  return patch_iou(rasterize_patch(a, extent, policy), rasterize_patch(b, extent, policy), bin_threshold);
}

std::size_t count_above(const Grid & grid, double threshold)
{
  return static_cast<std::size_t>(
    std::count_if(grid.values().begin(), grid.values().end(), [&](double v) { return v > threshold; }));
}

double clamp_prob(double p, double epsilon) { return std::min(std::max(p, epsilon), 1.0 - epsilon); }

}  // namespace affuq
