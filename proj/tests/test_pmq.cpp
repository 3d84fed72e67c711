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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "affuq/error.hpp"
#include "affuq/pmq.hpp"
#include "test_support.hpp"

using namespace affuq;
using affuq::testing::make_gt;

namespace
{

const Extent kExt{12, 12};

Observation make_obs(const ProbMask & mask, std::vector<double> probs)
{
  Observation o;
  o.mask_mean = mask;
  o.class_probs_mean = ClassProbs(std::move(probs));
  o.k = 1;
  return o;
}

double oracle_fg(const BinaryMask & gt, const Grid & obs, double eps)
{
  double sum = 0.0;
  double n = 0.0;
  for (int r = 0; r < gt.rows(); ++r) {
    for (int c = 0; c < gt.cols(); ++c) {
      if (gt(r, c)) {
        sum -= std::log(std::min(std::max(obs(r, c), eps), 1.0 - eps));
        n += 1.0;
      }
    }
  }
  return sum / n;
}

double oracle_bg(const BinaryMask & gt, const Grid & obs, double eps, double floor)
{
  double sum = 0.0;
  double n = 0.0;
  for (int r = 0; r < gt.rows(); ++r) {
    for (int c = 0; c < gt.cols(); ++c) {
      if (gt(r, c)) {
        n += 1.0;
      } else if (obs(r, c) > floor) {
        sum -= std::log(1.0 - std::min(std::max(obs(r, c), eps), 1.0 - eps));
      }
    }
  }
  return sum / n;
}

FrameAssignment frame_with(std::vector<double> tp, std::size_t fp, std::size_t fn)
{
  FrameAssignment f;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    f.matches.push_back({i, i, tp[i], 1.0, tp[i] * tp[i], 0});
    f.q.push_back(tp[i]);
  }
  f.n_tp = tp.size();
  f.n_fp = fp;
  f.n_fn = fn;
  f.fp_classes.assign(fp, 0);
  f.fn_classes.assign(fn, 0);
  return f;
}

}  // namespace

TEST(QLabel, Examples)
{
  EXPECT_EQ(q_label(1, ClassProbs({0.0, 1.0})), 1.0);
  EXPECT_DOUBLE_EQ(q_label(3, ClassProbs(std::vector<double>(10, 0.1))), 0.1);
  EXPECT_EQ(q_label(2, ClassProbs({0.2, 0.5, 0.3})), 0.3);
  try {
    q_label(3, ClassProbs({0.2, 0.5, 0.3}));
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::kClassMismatch);
  }
  EXPECT_THROW(q_label(-1, ClassProbs({1.0})), Error);
}

TEST(FgLoss, Examples)
{
  const GroundTruthInstance gt = make_gt(kExt, Window{2, 2, 4, 4}, 0);
  Grid obs(12, 12, 0.0);
  for (int r = 2; r < 6; ++r) {
    for (int c = 2; c < 6; ++c) {
      obs(r, c) = 1.0;
    }
  }
  EXPECT_NEAR(fg_loss(gt.mask, obs), -std::log(1.0 - 1e-7), 1e-15);
  EXPECT_NEAR(fg_loss(gt.mask, obs), 1e-7, 1e-12);
  for (int c = 2; c < 6; ++c) {
    obs(2, c) = obs(3, c) = 0.5;
  }
  EXPECT_NEAR(fg_loss(gt.mask, obs), std::log(2.0) / 2.0, 1e-6);
  EXPECT_NEAR(fg_loss(gt.mask, obs), oracle_fg(gt.mask, obs, 1e-7), 1e-12);
  for (int r = 4; r < 6; ++r) {
    for (int c = 2; c < 6; ++c) {
      obs(r, c) = 0.5;
    }
  }
  EXPECT_NEAR(fg_loss(gt.mask, obs), std::log(2.0), 1e-12);
}

TEST(FgLoss, EmptyGroundTruthRejected)
{
  try {
    fg_loss(BinaryMask(4, 4, 0), Grid(4, 4, 0.5));
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidGroundTruth);
  }
  EXPECT_THROW(bg_loss(BinaryMask(4, 4, 0), Grid(4, 4, 0.5)), Error);
  EXPECT_THROW(fg_loss(BinaryMask(4, 4, 1), Grid(4, 5, 0.5)), Error);
}

TEST(BgLoss, Examples)
{
  const GroundTruthInstance gt = make_gt(kExt, Window{2, 2, 2, 4}, 0);
  Grid obs(12, 12, 0.0);
  obs(2, 2) = 0.9;
  EXPECT_EQ(bg_loss(gt.mask, obs), 0.0);
  obs(0, 0) = obs(0, 1) = obs(7, 7) = obs(11, 11) = 0.5;
  EXPECT_NEAR(bg_loss(gt.mask, obs), 4.0 * std::log(2.0) / 8.0, 1e-15);
  EXPECT_NEAR(bg_loss(gt.mask, obs), 0.34657359, 1e-8);
  obs(5, 5) = 5e-4;  // below the detection floor
  EXPECT_NEAR(bg_loss(gt.mask, obs), 4.0 * std::log(2.0) / 8.0, 1e-15);
}

TEST(Losses, MatchPerPixelOracleOnRandomMasks)
{
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    BinaryMask gt(10, 14, 0);
    Grid obs(10, 14, 0.0);
    for (int r = 0; r < 10; ++r) {
      for (int c = 0; c < 14; ++c) {
        gt(r, c) = u(rng) < 0.4 ? 1 : 0;
        obs(r, c) = u(rng) < 0.7 ? u(rng) : (u(rng) < 0.5 ? 0.0 : 1.0);
      }
    }
    gt(0, 0) = 1;
    EXPECT_NEAR(fg_loss(gt, obs), oracle_fg(gt, obs, 1e-7), 1e-9);
    EXPECT_NEAR(bg_loss(gt, obs), oracle_bg(gt, obs, 1e-7, 1e-3), 1e-9);
    EXPECT_NEAR(q_spatial(gt, obs), std::exp(-(oracle_fg(gt, obs, 1e-7) + oracle_bg(gt, obs, 1e-7, 1e-3))), 1e-12);
  }
}

TEST(QSpatial, Examples)
{
  const GroundTruthInstance gt = make_gt(kExt, Window{3, 4, 5, 3}, 0);
  const Observation perfect = make_obs(affuq::testing::const_mask(3, 4, 5, 3, 1.0), {1.0, 0.0});
  EXPECT_GE(q_spatial(gt, perfect, kExt), 1.0 - 1e-5);
  const Observation half = make_obs(affuq::testing::const_mask(3, 4, 5, 3, 0.5), {1.0, 0.0});
  EXPECT_NEAR(q_spatial(gt, half, kExt), 0.5, 1e-12);

  // fg: 0.5 on all 15 pixels; bg: 5 pixels at 0.5 in the extra column.
  const Observation wide = make_obs(affuq::testing::const_mask(3, 4, 5, 4, 0.5), {1.0, 0.0});
  const double expected = std::exp(-(std::log(2.0) + 5.0 * std::log(2.0) / 15.0));
  EXPECT_NEAR(q_spatial(gt, wide, kExt), expected, 1e-12);
}

TEST(QSpatial, TranslationInvariant)
{
  std::mt19937_64 rng(2);
  const Extent ext{30, 30};
  for (int t = 0; t < 20; ++t) {
    const Grid g = affuq::testing::random_grid(rng, 6, 7, 0.9);
    const GroundTruthInstance a = make_gt(ext, Window{4, 5, 5, 5}, 0);
    const GroundTruthInstance b = make_gt(ext, Window{4 + 9, 5 + 11, 5, 5}, 0);
    const Observation oa = make_obs(ProbMask::identity(3, 4, g), {1.0});
    const Observation ob = make_obs(ProbMask::identity(3 + 9, 4 + 11, g), {1.0});
    EXPECT_NEAR(q_spatial(a, oa, ext), q_spatial(b, ob, ext), 1e-15);
  }
}

TEST(Ppmq, Examples)
{
  EXPECT_DOUBLE_EQ(ppmq(0.5, 0.5), 0.5);
  EXPECT_EQ(ppmq(0.0, 0.9), 0.0);
  EXPECT_NEAR(ppmq(0.64, 1.0), 0.8, 1e-15);
}

TEST(PairwisePmq, PerfectAndZeroLabel)
{
  const std::vector<GroundTruthInstance> gts{make_gt(kExt, Window{1, 1, 4, 4}, 1)};
  const std::vector<Observation> obs{
    make_obs(affuq::testing::const_mask(1, 1, 4, 4, 1.0), {0.0, 1.0}),
    make_obs(affuq::testing::const_mask(1, 1, 4, 4, 1.0), {1.0, 0.0})};
  const PairwiseTable t = pairwise_pmq(gts, obs, kExt);
  EXPECT_GE(t.ppmq(0, 0), 1.0 - 1e-4);
  EXPECT_EQ(t.ppmq(0, 1), 0.0);
  EXPECT_EQ(t.at(0, 1).q_label, 0.0);
  EXPECT_TRUE(pairwise_pmq({}, obs, kExt).ppmq.size() == 0);
}

TEST(PairwisePmq, MatchesRecomposition)
{
  std::mt19937_64 rng(13);
  std::vector<GroundTruthInstance> gts;
  std::vector<Observation> obs;
  for (int i = 0; i < 3; ++i) {
    gts.push_back(make_gt(kExt, Window{i * 3, i * 2, 4, 5}, i % 2));
    obs.push_back(make_obs(
      ProbMask::identity(static_cast<int>(rng() % 6), static_cast<int>(rng() % 6), affuq::testing::random_grid(rng, 5, 5, 0.9)),
      affuq::testing::random_simplex(rng, 2)));
  }
  const PairwiseTable t = pairwise_pmq(gts, obs, kExt);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double ql = obs[j].class_probs_mean[static_cast<std::size_t>(gts[i].class_id)];
      const Grid raster = rasterize(obs[j].mask_mean, kExt);
      const double qs = std::exp(-(oracle_fg(gts[i].mask, raster, 1e-7) + oracle_bg(gts[i].mask, raster, 1e-7, 1e-3)));
      EXPECT_NEAR(t.ppmq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), std::sqrt(ql * qs), 1e-12);
      const PairQuality pq = t.at(i, j);
      EXPECT_NEAR(pq.ppmq, std::sqrt(pq.q_label * pq.q_spatial), 1e-12);
    }
  }
}

TEST(AssignHungarian, Examples)
{
  Eigen::MatrixXd one(1, 1);
  one << 0.7;
  const FrameAssignment a = assign_hungarian(one);
  ASSERT_EQ(a.matches.size(), 1u);
  EXPECT_EQ(a.q, std::vector<double>{0.7});

  Eigen::MatrixXd two(2, 2);
  two << 0.9, 0.1, 0.2, 0.8;
  const FrameAssignment b = assign_hungarian(two);
  ASSERT_EQ(b.n_tp, 2u);
  EXPECT_EQ(b.matches[0].obs_index, 0u);
  EXPECT_EQ(b.matches[1].obs_index, 1u);
  EXPECT_NEAR(b.q[0] + b.q[1], 1.7, 1e-15);
}

TEST(AssignHungarian, ZeroAssignmentsAreNotMatches)
{
  Eigen::MatrixXd m(2, 3);
  m << 0.6, 0.0, 0.0, 0.0, 0.0, 0.0;
  const FrameAssignment a = assign_hungarian(m);
  EXPECT_EQ(a.n_tp, 1u);
  EXPECT_EQ(a.n_fn, 1u);
  EXPECT_EQ(a.n_fp, 2u);
  EXPECT_EQ(a.unmatched_gt, std::vector<std::size_t>{1});
  EXPECT_EQ(a.unmatched_obs, (std::vector<std::size_t>{1, 2}));

  const FrameAssignment empty = assign_hungarian(Eigen::MatrixXd(0, 2));
  EXPECT_EQ(empty.n_fp, 2u);
  EXPECT_EQ(empty.n_fn, 0u);
}

TEST(AggregatePmq, Examples)
{
  EXPECT_DOUBLE_EQ(aggregate_pmq({frame_with({0.8}, 0, 0)}).pmq, 0.8);
  const PMQResult r = aggregate_pmq({frame_with({0.8}, 0, 1)});
  EXPECT_EQ(r.pmq, 0.4);
  EXPECT_EQ(r.mean_ppmq_over_tp, 0.8);
  EXPECT_EQ(r.fn, 1u);
}

TEST(AggregatePmq, MultiFrameSum)
{
  const std::vector<FrameAssignment> frames{
    frame_with({0.8, 0.6}, 1, 0), frame_with({0.9}, 0, 2), frame_with({}, 3, 0)};
  const PMQResult r = aggregate_pmq(frames);
  EXPECT_NEAR(r.pmq, (0.8 + 0.6 + 0.9) / (3.0 + 4.0 + 2.0), 1e-15);
  EXPECT_NEAR(r.mean_ppmq_over_tp, (0.8 + 0.6 + 0.9) / 3.0, 1e-15);
  EXPECT_EQ(r.tp, 3u);
  EXPECT_EQ(r.fp, 4u);
  EXPECT_EQ(r.fn, 2u);
  EXPECT_LE(r.pmq, r.mean_ppmq_over_tp);
}

TEST(AggregatePmq, Undefined)
{
  try {
    aggregate_pmq({});
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedMetric);
  }
  EXPECT_THROW(aggregate_pmq({frame_with({}, 0, 0)}), Error);
}

TEST(AggregatePmq, FalsePositiveStrictlyLowers)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> tp{u(rng), u(rng)};
    const double base = aggregate_pmq({frame_with(tp, 1, 1)}).pmq;
    const double more = aggregate_pmq({frame_with(tp, 2, 1)}).pmq;
    EXPECT_LT(more, base);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, aggregate_pmq({frame_with(tp, 1, 1)}).mean_ppmq_over_tp);
  }
}

TEST(ScoreFrame, PerClassBookkeeping)
{
  const std::vector<GroundTruthInstance> gts{make_gt(kExt, Window{0, 0, 4, 4}, 0), make_gt(kExt, Window{6, 6, 4, 4}, 1)};
  const std::vector<Observation> obs{
    make_obs(affuq::testing::const_mask(0, 0, 4, 4, 0.9), {0.8, 0.2}),
    make_obs(affuq::testing::const_mask(6, 6, 4, 4, 0.9), {1.0, 0.0})};
  const FrameAssignment f = score_frame("f", gts, obs, kExt);
  EXPECT_EQ(f.n_tp, 1u);
  EXPECT_EQ(f.n_fn, 1u);
  EXPECT_EQ(f.n_fp, 1u);
  EXPECT_EQ(f.fn_classes, std::vector<int>{1});
  EXPECT_EQ(f.fp_classes, std::vector<int>{0});
  const PMQResult r = aggregate_pmq({f});
  ASSERT_TRUE(r.per_class.count(0));
  ASSERT_TRUE(r.per_class.count(1));
  EXPECT_EQ(r.per_class.at(0).tp, 1u);
  EXPECT_EQ(r.per_class.at(0).fp, 1u);
  EXPECT_EQ(r.per_class.at(1).fn, 1u);
  EXPECT_EQ(r.per_class.at(1).pmq.value(), 0.0);
  EXPECT_NEAR(*r.per_class.at(0).pmq, f.q[0] / 2.0, 1e-15);
}

TEST(ScoreFrame, DisjointPairKeepsClampLimitedQuality)
{
  // No overlap: every GT pixel sits at the clamp, so Q_S = eps * exp(-L_BG),
  // which is far above the match floor.
  const std::vector<GroundTruthInstance> gts{make_gt(kExt, Window{0, 0, 4, 4}, 0)};
  const std::vector<Observation> obs{make_obs(affuq::testing::const_mask(8, 8, 2, 2, 0.5), {1.0, 0.0})};
  const FrameAssignment f = score_frame("f", gts, obs, kExt);
  const double expected = std::sqrt(1e-7 * std::exp(-4.0 * std::log(2.0) / 16.0));
  ASSERT_EQ(f.n_tp, 1u);
  EXPECT_NEAR(f.q[0], expected, 1e-12);
}

TEST(Ppmq, MonotoneInGroundTruthClassProbability)
{
  const GroundTruthInstance gt = make_gt(kExt, Window{2, 2, 5, 5}, 1);
  const ProbMask m = affuq::testing::const_mask(2, 3, 5, 5, 0.8);
  double prev = -1.0;
  for (double p = 0.0; p <= 1.0 + 1e-12; p += 0.05) {
    const double pc = std::min(p, 1.0);
    const PairwiseTable t = pairwise_pmq({gt}, {make_obs(m, {(1.0 - pc) * 0.5, pc, (1.0 - pc) * 0.5})}, kExt);
    EXPECT_GE(t.ppmq(0, 0), prev);
    prev = t.ppmq(0, 0);
  }
}
