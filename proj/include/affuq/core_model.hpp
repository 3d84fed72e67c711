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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "affuq/error.hpp"

namespace affuq
{

/// Image size in pixels, (height, width).
struct Extent
{
  int rows{0};
  int cols{0};

  bool valid() const noexcept { return rows > 0 && cols > 0; }
  bool operator==(const Extent &) const = default;
};

/// Axis-aligned box, (x, y) is the top-left corner in pixels.
struct BBox
{
  double x{0.0};
  double y{0.0};
  double w{0.0};
  double h{0.0};

  bool operator==(const BBox &) const = default;
};

/// Clips `box` to [0, cols] x [0, rows]. Throws kInvalidArgument when the
/// box is non-finite or has no area left after clipping.
BBox clip_bbox(const BBox & box, const Extent & extent);

/// Dense row-major 2-D array.
template <typename T>
class Grid2D
{
public:
  Grid2D() = default;
  Grid2D(int rows, int cols, T fill = T{})
  : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill)
  {
  }
  Grid2D(int rows, int cols, std::vector<T> values) : rows_(rows), cols_(cols), data_(std::move(values))
  {
    if (data_.size() != checked_size(rows, cols)) {
      throw Error(ErrorKind::kInvalidArgument, "grid value count does not match resolution");
    }
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T & operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T & operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T> & raw() const noexcept { return data_; }

  bool operator==(const Grid2D &) const = default;

private:
  static std::size_t checked_size(int rows, int cols)
  {
    if (rows < 0 || cols < 0) {
      throw Error(ErrorKind::kInvalidArgument, "negative grid resolution");
    }
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_{0};
  int cols_{0};
  std::vector<T> data_;
};

using Grid = Grid2D<double>;
using BinaryMask = Grid2D<std::uint8_t>;

/// Integer pixel rectangle in image frame: rows [row0, row0+rows), cols [col0, col0+cols).
struct Window
{
  int row0{0};
  int col0{0};
  int rows{0};
  int cols{0};

  bool empty() const noexcept { return rows <= 0 || cols <= 0; }
  bool contains(int r, int c) const noexcept
  {
    return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
  }
  bool operator==(const Window &) const = default;
};

/// Bounding rectangle of both windows; an empty operand is ignored.
Window window_union(const Window & a, const Window & b);
Window window_intersection(const Window & a, const Window & b);
Window full_window(const Extent & extent);

/// Categorical distribution over the affordance classes (plus an optional
/// trailing background slot, see DatasetHeader::background_class).
class ClassProbs
{
public:
  static constexpr double kSumTolerance = 1e-6;

  ClassProbs() = default;
  /// Throws kInvalidArgument unless every entry is in [0,1] and they sum to 1.
  explicit ClassProbs(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }
  const std::vector<double> & raw() const noexcept { return probs_; }

  /// Index of the largest entry; the lowest index wins ties.
  int argmax() const;
  double max() const;

  bool operator==(const ClassProbs &) const = default;

private:
  std::vector<double> probs_;
};

/// Foreground-probability heatmap stored at its own resolution and placed on
/// a footprint of the image. When the footprint equals the grid resolution the
/// placement is the identity.
struct ProbMask
{
  int origin_row{0};
  int origin_col{0};
  int footprint_rows{0};
  int footprint_cols{0};
  Grid grid;

  /// Heatmap whose footprint equals its resolution.
  static ProbMask identity(int origin_row, int origin_col, Grid grid);
  /// Throws kInvalidArgument on a bad footprint or values outside [0,1].
  void validate() const;

  Window footprint() const noexcept { return {origin_row, origin_col, footprint_rows, footprint_cols}; }
  bool operator==(const ProbMask &) const = default;
};

/// Grid placed at `window` in image frame. Pixels outside the window are 0.
struct Patch
{
  Window window;
  Grid values;

  double at_image(int r, int c) const
  {
    return window.contains(r, c) ? values(r - window.row0, c - window.col0) : 0.0;
  }
};

struct Detection
{
  BBox bbox;
  ClassProbs class_probs;
  ProbMask mask;
  int sample_index{0};
};

struct GroundTruthInstance
{
  BBox bbox;
  int class_id{0};
  BinaryMask mask;  // image frame
  std::string frame_id;

  std::size_t area() const;
  /// Throws kInvalidGroundTruth on an empty mask or class outside [0, n_classes).
  void validate(std::size_t n_classes) const;
};

struct Frame
{
  std::string frame_id;
  Extent extent;
  std::vector<std::vector<Detection>> passes;  // indexed by sample_index
  std::vector<GroundTruthInstance> ground_truth;

  /// All detections of every pass, in pass order.
  std::vector<Detection> pooled_detections() const;
};

/// Class names, image extent and frames shared by every file format.
struct Dataset
{
  std::vector<std::string> classes;
  bool background_class{false};  // class vectors carry one extra trailing slot
  Extent extent;
  std::vector<Frame> frames;

  std::size_t prob_dim() const noexcept { return classes.size() + (background_class ? 1 : 0); }
};

// ---------------------------------------------------------------------------
// Mask geometry

enum class Resampling { kBilinear, kNearest };

/// Dense image-frame grid; pixels outside the mask footprint are exactly 0.
Grid rasterize(const ProbMask & mask, const Extent & extent, Resampling policy = Resampling::kBilinear);

/// Same values as `rasterize`, restricted to the footprint clipped to `extent`.
Patch rasterize_patch(const ProbMask & mask, const Extent & extent, Resampling policy = Resampling::kBilinear);

/// Copies `patch` onto `window`, zero-filling where they do not overlap.
Grid embed(const Patch & patch, const Window & window);

/// IoU of the masks binarized at `value > bin_threshold`; 0 for an empty union.
double mask_iou(
  const ProbMask & a, const ProbMask & b, const Extent & extent, double bin_threshold = 0.5,
  Resampling policy = Resampling::kBilinear);
double patch_iou(const Patch & a, const Patch & b, double bin_threshold = 0.5);

std::size_t count_above(const Grid & grid, double threshold);

double clamp_prob(double p, double epsilon = 1e-7);

}  // namespace affuq
