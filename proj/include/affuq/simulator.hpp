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
#include <string>
#include <vector>

#include "affuq/core_model.hpp"

namespace affuq
{

/// Strategy generating the M stochastic passes, expressed as the correlation
/// structure of per-pass noise.
enum class Regime { kMcDropout, kMaskEnsembles, kDeepEnsembles, kSnapshotEnsembles };

const char * to_string(Regime regime);
Regime regime_from_string(const std::string & name);

struct NoiseConfig
{
  double bbox_sigma{1.0};       // pixels
  double logit_sigma{1.0};
  double mask_flip_rate{0.02};  // per-pixel probability of p -> 1 - p
  double miss_rate{0.05};
  double mask_blur{1.0};        // sigmoid edge width in pixels; 0 renders hard masks
};

struct SimConfig
{
  std::uint64_t seed{42};
  Extent image_extent{96, 128};
  int n_frames{10};
  int instances_min{1};
  int instances_max{4};
  int n_classes{6};
  int passes{8};  // M
  Regime regime{Regime::kMcDropout};
  NoiseConfig noise;
  double correlation{0.5};  // shared fraction of noise variance under MC-dropout / snapshot bias
  double dropout_rate{0.1};
  double mask_scale{2.0};   // Masksembles overlap scale s
  int mask_units{24};       // latent units gated by Masksembles masks
  double logit_scale{4.0};  // correct-class logit before noise
  int min_size{12};
  int max_size{32};
  double max_gt_iou{0.3};  // placement rejection threshold between ground-truth instances
  bool background_class{false};

  /// Throws kInvalidArgument on out-of-range fields.
  void validate() const;
};

struct SamplingMask
{
  std::vector<std::uint8_t> bits;
  std::size_t active_count{0};
};

/// M i.i.d. masks, each bit kept with probability 1 - rate.
std::vector<SamplingMask> gen_dropout_masks(std::size_t length, double rate, std::size_t count, std::uint64_t seed);

/// M masks of identical cardinality whose pairwise overlap shrinks as `scale`
/// approaches 1 (disjoint at scale 1). Every pair overlaps in the same number
/// of bits. Throws kInfeasibleConfig when `length` cannot hold the masks.
std::vector<SamplingMask> gen_masksembles(std::size_t length, std::size_t count, double scale, std::uint64_t seed);

enum class Shape { kRectangle, kEllipse };

/// Ground truth of one frame plus the analytic shapes it was rendered from.
struct Scene
{
  Frame frame;
  std::vector<Shape> shapes;  // parallel to frame.ground_truth
};

/// Class names "class_0", "class_1", ...
std::vector<std::string> default_class_names(int n_classes);

Scene gen_scene(const SimConfig & cfg, int frame_index);

/// One detection list per pass, each detection tagged with its pass index.
std::vector<std::vector<Detection>> simulate_passes(const Scene & scene, const SimConfig & cfg, int frame_index);

/// Scenes and passes for every frame, frame ids "frame_0000", ...
Dataset simulate_dataset(const SimConfig & cfg);

}  // namespace affuq
