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

#include "affuq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <numbers>
#include <numeric>
#include <random>

namespace affuq
{

const char * to_string(Regime regime)
{
  switch (regime) {
    case Regime::kMcDropout:
      return "mc-dropout";
    case Regime::kMaskEnsembles:
      return "mask-ensembles";
    case Regime::kDeepEnsembles:
      return "deep-ensembles";
    case Regime::kSnapshotEnsembles:
      return "snapshot-ensembles";
  }
  return "unknown";
}

Regime regime_from_string(const std::string & name)
{
  for (Regime r :
       {Regime::kMcDropout, Regime::kMaskEnsembles, Regime::kDeepEnsembles, Regime::kSnapshotEnsembles}) {
    if (name == to_string(r)) {
      return r;
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown sampling regime '" + name + "'");
}

void SimConfig::validate() const
{
  auto require = [](bool ok, const char * what) {
    if (!ok) {
      throw Error(ErrorKind::kInvalidArgument, what);
    }
  };
  require(image_extent.valid(), "image_extent must be positive");
  require(n_frames >= 1, "n_frames must be >= 1");
  require(instances_min >= 0 && instances_min <= instances_max, "instances range must satisfy 0 <= min <= max");
  require(n_classes >= 1, "n_classes must be >= 1");
  require(passes >= 1, "passes (M) must be >= 1");
  require(noise.bbox_sigma >= 0.0 && noise.logit_sigma >= 0.0 && noise.mask_blur >= 0.0, "noise scales must be >= 0");
  require(noise.mask_flip_rate >= 0.0 && noise.mask_flip_rate < 1.0, "mask_flip_rate must lie in [0,1)");
  require(noise.miss_rate >= 0.0 && noise.miss_rate <= 1.0, "miss_rate must lie in [0,1]");
  require(correlation >= 0.0 && correlation <= 1.0, "correlation must lie in [0,1]");
  require(dropout_rate > 0.0 && dropout_rate < 1.0, "dropout_rate must lie in (0,1)");
  require(mask_scale >= 1.0, "mask_scale must be >= 1");
  require(mask_units >= 1, "mask_units must be >= 1");
  require(min_size >= 4 && min_size <= max_size, "sizes must satisfy 4 <= min_size <= max_size");
  require(
    max_size <= image_extent.rows && max_size <= image_extent.cols, "max_size must fit inside the image extent");
  require(max_gt_iou >= 0.0 && max_gt_iou <= 1.0, "max_gt_iou must lie in [0,1]");
}

namespace
{

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t key(std::initializer_list<std::uint64_t> parts)
{
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) {
    h = mix(h ^ p);
  }
  return h;
}

enum Stream : std::uint64_t {
  kScene = 1,
  kShared,
  kFresh,
  kBias,
  kLatent,
  kPixelShared,
  kPixelFresh,
  kPixelBias,
  kPixelLatent,
  kMasks,
};

// Standard normal addressed by a key, so shared pixel noise can be looked up
// by image coordinate from any pass without storing a field.
double keyed_normal(std::uint64_t k)
{
  const std::uint64_t a = mix(k);
  const std::uint64_t b = mix(a);
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> normals(std::uint64_t seed, std::size_t n)
{
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double & v : out) {
    v = dist(gen);
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double signed_distance(Shape shape, const BBox & box, double px, double py)
{
  if (shape == Shape::kRectangle) {
    return std::min({px - box.x, box.x + box.w - px, py - box.y, box.y + box.h - py});
  }
  const double a = box.w / 2.0;
  const double b = box.h / 2.0;
  const double dx = (px - (box.x + a)) / a;
  const double dy = (py - (box.y + b)) / b;
  return (1.0 - std::sqrt(dx * dx + dy * dy)) * std::min(a, b);
}

BinaryMask render_gt(Shape shape, const BBox & box, const Extent & extent)
{
  BinaryMask mask(extent.rows, extent.cols);
  const int r0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int r1 = std::min(extent.rows, static_cast<int>(std::ceil(box.y + box.h)));
  const int c0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int c1 = std::min(extent.cols, static_cast<int>(std::ceil(box.x + box.w)));
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      mask(r, c) = signed_distance(shape, box, c + 0.5, r + 0.5) > 0.0 ? 1 : 0;
    }
  }
  return mask;
}

double binary_iou(const BinaryMask & a, const BinaryMask & b)
{
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool fa = a.values()[i] != 0;
    const bool fb = b.values()[i] != 0;
    inter += (fa && fb) ? 1 : 0;
    uni += (fa || fb) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::string frame_name(int index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d", index);
  return buf;
}

// Combines the noise sources of one scalar component according to the regime.
struct NoiseMixer
{
  const SimConfig & cfg;
  const std::vector<SamplingMask> * masks;  // Masksembles only

  double mix_terms(double fresh, double shared, double bias) const
  {
    const double rho = cfg.correlation;
    switch (cfg.regime) {
      case Regime::kDeepEnsembles:
        return fresh;
      case Regime::kMcDropout:
        return std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * fresh;
      case Regime::kSnapshotEnsembles:
        return std::sqrt(rho) * bias + std::sqrt(1.0 - rho) * fresh;
      case Regime::kMaskEnsembles:
        break;
    }
    return 0.0;
  }

  // Sum of the active latent units, scaled to unit variance.
  template <typename Latent>
  double gated(std::size_t pass, Latent && latent) const
  {
    const SamplingMask & mask = (*masks)[pass];
    double sum = 0.0;
    for (std::size_t l = 0; l < mask.bits.size(); ++l) {
      if (mask.bits[l]) {
        sum += latent(l);
      }
    }
    return sum / std::sqrt(static_cast<double>(mask.active_count));
  }
};

}  // namespace

std::vector<SamplingMask> gen_dropout_masks(std::size_t length, double rate, std::size_t count, std::uint64_t seed)
{
  if (!(rate > 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "dropout rate must lie in (0,1)");
  }
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<SamplingMask> masks(count);
  for (SamplingMask & m : masks) {
    m.bits.resize(length);
    for (auto & bit : m.bits) {
      bit = keep(gen) ? 1 : 0;
      m.active_count += bit;
    }
  }
  return masks;
}

std::vector<SamplingMask> gen_masksembles(std::size_t length, std::size_t count, double scale, std::uint64_t seed)
{
  if (count < 1 || !(scale >= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "Masksembles needs count >= 1 and scale >= 1");
  }
  if (count == 1) {
    return {SamplingMask{std::vector<std::uint8_t>(length, 1), length}};
  }
  // Every mask = one shared block + its own exclusive block, so all masks have
  // `active` bits and every pair overlaps in exactly `shared` bits.
  const auto m = static_cast<double>(count);
  const auto active = static_cast<std::size_t>(std::floor(static_cast<double>(length) / (1.0 + (m - 1.0) / scale)));
  const std::size_t exclusive = std::min(active, (length - active) / (count - 1));
  const std::size_t shared = active - exclusive;
  if (exclusive < 1) {
    throw Error(
      ErrorKind::kInfeasibleConfig,
      std::to_string(length) + " units cannot hold " + std::to_string(count) + " masks at scale " +
        std::to_string(scale));
  }

  std::vector<std::size_t> perm(length);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  std::shuffle(perm.begin(), perm.end(), gen);

  std::vector<SamplingMask> masks(count);
  for (std::size_t i = 0; i < count; ++i) {
    SamplingMask & mask = masks[i];
    mask.bits.assign(length, 0);
    for (std::size_t s = 0; s < shared; ++s) {
      mask.bits[perm[s]] = 1;
    }
    for (std::size_t e = 0; e < exclusive; ++e) {
      mask.bits[perm[shared + i * exclusive + e]] = 1;
    }
    mask.active_count = shared + exclusive;
  }
  return masks;
}

std::vector<std::string> default_class_names(int n_classes)
{
  std::vector<std::string> names;
  for (int c = 0; c < n_classes; ++c) {
    names.push_back("class_" + std::to_string(c));
  }
  return names;
}

Scene gen_scene(const SimConfig & cfg, int frame_index)
{
  cfg.validate();
  std::mt19937_64 gen(key({cfg.seed, kScene, static_cast<std::uint64_t>(frame_index)}));
  std::uniform_int_distribution<int> count_dist(cfg.instances_min, cfg.instances_max);
  std::uniform_int_distribution<int> class_dist(0, cfg.n_classes - 1);
  std::bernoulli_distribution ellipse_dist(0.5);
  std::uniform_real_distribution<double> size_dist(cfg.min_size, cfg.max_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxAttempts = 200;

  Scene scene;
  scene.frame.frame_id = frame_name(frame_index);
  scene.frame.extent = cfg.image_extent;
  const int n = count_dist(gen);
  for (int i = 0; i < n; ++i) {
    const int cls = class_dist(gen);
    GroundTruthInstance inst;
    Shape shape = Shape::kRectangle;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      shape = ellipse_dist(gen) ? Shape::kEllipse : Shape::kRectangle;
      const double w = size_dist(gen);
      const double h = size_dist(gen);
      const double x = unit(gen) * (cfg.image_extent.cols - w);
      const double y = unit(gen) * (cfg.image_extent.rows - h);
      inst.bbox = {x, y, w, h};
      inst.mask = render_gt(shape, inst.bbox, cfg.image_extent);
      const bool clear = std::all_of(
        scene.frame.ground_truth.begin(), scene.frame.ground_truth.end(),
        [&](const GroundTruthInstance & other) { return binary_iou(inst.mask, other.mask) <= cfg.max_gt_iou; });
      if (clear) {
        break;
      }
    }
    inst.class_id = cls;
    inst.frame_id = scene.frame.frame_id;
    scene.frame.ground_truth.push_back(std::move(inst));
    scene.shapes.push_back(shape);
  }
  return scene;
}

std::vector<std::vector<Detection>> simulate_passes(const Scene & scene, const SimConfig & cfg, int frame_index)
{
  cfg.validate();
  const auto passes = static_cast<std::size_t>(cfg.passes);
  const auto f = static_cast<std::uint64_t>(frame_index);
  const std::size_t dim = static_cast<std::size_t>(cfg.n_classes) + (cfg.background_class ? 1 : 0);
  const std::size_t n_scalar = 4 + dim + 1;  // bbox, logits, miss
  const auto units = static_cast<std::size_t>(cfg.mask_units);
  const Extent & extent = scene.frame.extent;

  std::vector<SamplingMask> masks;
  if (cfg.regime == Regime::kMaskEnsembles) {
    masks = gen_masksembles(units, passes, cfg.mask_scale, key({cfg.seed, kMasks}));
  }
  const NoiseMixer mixer{cfg, &masks};
  const bool regime_masks = cfg.regime == Regime::kMaskEnsembles;

  std::vector<std::vector<Detection>> out(passes);
  for (std::size_t i = 0; i < scene.frame.ground_truth.size(); ++i) {
    const GroundTruthInstance & gt = scene.frame.ground_truth[i];
    const Shape shape = scene.shapes[i];
    const std::vector<double> shared = normals(key({cfg.seed, kShared, f, i}), n_scalar);
    const std::vector<double> latent =
      regime_masks ? normals(key({cfg.seed, kLatent, f, i}), n_scalar * units) : std::vector<double>{};

    for (std::size_t m = 0; m < passes; ++m) {
      const std::vector<double> fresh = normals(key({cfg.seed, kFresh, f, i, m}), n_scalar);
      const std::vector<double> bias = normals(key({cfg.seed, kBias, m}), n_scalar);
      std::vector<double> z(n_scalar);
      for (std::size_t j = 0; j < n_scalar; ++j) {
        z[j] = regime_masks ? mixer.gated(m, [&](std::size_t l) { return latent[j * units + l]; })
                            : mixer.mix_terms(fresh[j], shared[j], bias[j]);
      }

      const double miss_rate = cfg.noise.miss_rate;
      if (miss_rate >= 1.0 || normal_cdf(z[4 + dim]) < miss_rate) {
        continue;
      }

      const double sb = cfg.noise.bbox_sigma;
      const BBox box{
        gt.bbox.x + sb * z[0], gt.bbox.y + sb * z[1], std::max(2.0, gt.bbox.w + sb * z[2]),
        std::max(2.0, gt.bbox.h + sb * z[3])};
      const int r0 = std::max(0, static_cast<int>(std::floor(box.y)));
      const int r1 = std::min(extent.rows, static_cast<int>(std::ceil(box.y + box.h)));
      const int c0 = std::max(0, static_cast<int>(std::floor(box.x)));
      const int c1 = std::min(extent.cols, static_cast<int>(std::ceil(box.x + box.w)));
      if (r1 <= r0 || c1 <= c0) {
        continue;  // jittered entirely out of frame
      }

      std::vector<double> logits(dim, 0.0);
      for (std::size_t c = 0; c < dim; ++c) {
        logits[c] = (static_cast<int>(c) == gt.class_id ? cfg.logit_scale : 0.0) + cfg.noise.logit_sigma * z[4 + c];
      }
      const double top = *std::max_element(logits.begin(), logits.end());
      double norm = 0.0;
      for (double & l : logits) {
        l = std::exp(l - top);
        norm += l;
      }
      for (double & l : logits) {
        l /= norm;
      }

      Grid heat(r1 - r0, c1 - c0);
      const double flip = cfg.noise.mask_flip_rate;
      const double rho = cfg.correlation;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          const double d = signed_distance(shape, box, c + 0.5, r + 0.5);
          double p = cfg.noise.mask_blur > 0.0 ? 1.0 / (1.0 + std::exp(-d / cfg.noise.mask_blur)) : (d > 0.0 ? 1.0 : 0.0);
          if (flip > 0.0) {
            const auto ur = static_cast<std::uint64_t>(r);
            const auto uc = static_cast<std::uint64_t>(c);
            double zp = 0.0;
            if (regime_masks) {
              zp = mixer.gated(m, [&](std::size_t l) { return keyed_normal(key({cfg.seed, kPixelLatent, f, i, l, ur, uc})); });
            } else {
              const double fresh_px = keyed_normal(key({cfg.seed, kPixelFresh, f, i, m, ur, uc}));
              const double shared_px = cfg.regime == Regime::kMcDropout && rho > 0.0
                                         ? keyed_normal(key({cfg.seed, kPixelShared, f, i, ur, uc}))
                                         : 0.0;
              const double bias_px = cfg.regime == Regime::kSnapshotEnsembles && rho > 0.0
                                       ? keyed_normal(key({cfg.seed, kPixelBias, m, ur, uc}))
                                       : 0.0;
              zp = mixer.mix_terms(fresh_px, shared_px, bias_px);
            }
            if (normal_cdf(zp) < flip) {
              p = 1.0 - p;
            }
          }
          heat(r - r0, c - c0) = p;
        }
      }

      Detection det;
      det.bbox = clip_bbox(box, extent);
      det.class_probs = ClassProbs(std::move(logits));
      det.mask = ProbMask::identity(r0, c0, std::move(heat));
      det.sample_index = static_cast<int>(m);
      out[m].push_back(std::move(det));
    }
  }
  return out;
}

Dataset simulate_dataset(const SimConfig & cfg)
{
  cfg.validate();
  Dataset ds;
  ds.classes = default_class_names(cfg.n_classes);
  ds.background_class = cfg.background_class;
  ds.extent = cfg.image_extent;
  for (int fi = 0; fi < cfg.n_frames; ++fi) {
    Scene scene = gen_scene(cfg, fi);
    scene.frame.passes = simulate_passes(scene, cfg, fi);
    ds.frames.push_back(std::move(scene.frame));
  }
  return ds;
}

}  // namespace affuq
