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

#include <algorithm>
#include <numeric>
#include <random>

#include "affuq/error.hpp"
#include "affuq/fusion.hpp"
#include "test_support.hpp"

using namespace affuq;
using affuq::testing::const_mask;
using affuq::testing::make_det;

namespace
{

SampleMatrix categorical(std::initializer_list<std::initializer_list<double>> rows)
{
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto & r : rows) {
    Eigen::Index j = 0;
    for (double v : r) {
      m(i, j++) = v;
    }
    ++i;
  }
  return SampleMatrix(m, SampleMatrix::RowKind::kCategorical);
}

SampleMatrix random_samples(std::mt19937_64 & rng, int k, int d)
{
  Eigen::MatrixXd m(k, d);
  for (int i = 0; i < k; ++i) {
    const auto p = affuq::testing::random_simplex(rng, static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      m(i, j) = p[static_cast<std::size_t>(j)];
    }
  }
  return SampleMatrix(m, SampleMatrix::RowKind::kCategorical);
}

// Term-by-term recomputation with plain loops.
std::vector<std::vector<double>> loop_epistemic(const Eigen::MatrixXd & p)
{
  const auto k = static_cast<std::size_t>(p.rows());
  const auto d = static_cast<std::size_t>(p.cols());
  std::vector<double> mean(d, 0.0);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < d; ++i) {
      mean[i] += p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) / static_cast<double>(k);
    }
  }
  std::vector<std::vector<double>> out(d, std::vector<double>(d, 0.0));
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double di = p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) - mean[i];
        const double dj = p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) - mean[j];
        out[i][j] += di * dj / static_cast<double>(k);
      }
    }
  }
  return out;
}

std::vector<std::vector<double>> loop_aleatoric(const Eigen::MatrixXd & p)
{
  const auto k = static_cast<std::size_t>(p.rows());
  const auto d = static_cast<std::size_t>(p.cols());
  std::vector<std::vector<double>> out(d, std::vector<double>(d, 0.0));
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double pi = p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
        const double pj = p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));
        out[i][j] += ((i == j ? pi : 0.0) - pi * pj) / static_cast<double>(k);
      }
    }
  }
  return out;
}

void expect_matrix_near(const Eigen::MatrixXd & a, const std::vector<std::vector<double>> & b, double tol)
{
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      EXPECT_NEAR(a(i, j), b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], tol);
    }
  }
}

ObservationCluster cluster_of(std::vector<Detection> dets)
{
  ObservationCluster c;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    c.input_indices.push_back(i);
  }
  c.class_id = dets.front().class_probs.argmax();
  c.members = std::move(dets);
  return c;
}

}  // namespace

TEST(EpistemicCov, Examples)
{
  const Eigen::MatrixXd e = epistemic_cov(categorical({{1.0, 0.0}, {0.0, 1.0}}));
  EXPECT_DOUBLE_EQ(e(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(e(0, 1), -0.25);
  EXPECT_DOUBLE_EQ(e(1, 0), -0.25);
  EXPECT_DOUBLE_EQ(e(1, 1), 0.25);
  EXPECT_EQ(e.trace(), 0.5);
  const Eigen::MatrixXd z = epistemic_cov(categorical({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}));
  EXPECT_LE(z.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AleatoricCov, Examples)
{
  EXPECT_EQ(aleatoric_cov(categorical({{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}})).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd a = aleatoric_cov(categorical({{0.5, 0.5}}));
  EXPECT_DOUBLE_EQ(a(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(a(0, 1), -0.25);
  EXPECT_DOUBLE_EQ(a(1, 1), 0.25);
  EXPECT_EQ(a.trace(), 0.5);
}

TEST(Covariances, MatchLoopOracleOnRandomRows)
{
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const SampleMatrix s = random_samples(rng, 5, 4);
    expect_matrix_near(epistemic_cov(s), loop_epistemic(s.rows()), 1e-12);
    expect_matrix_near(aleatoric_cov(s), loop_aleatoric(s.rows()), 1e-12);
  }
}

TEST(TotalCov, Identity)
{
  const SampleMatrix s = categorical({{1.0, 0.0}, {0.0, 1.0}});
  Eigen::Matrix2d expected;
  expected << 0.25, -0.25, -0.25, 0.25;
  EXPECT_LE((total_cov(s) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((moment_cov(s) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(total_cov(categorical({{0.0, 1.0, 0.0}})).cwiseAbs().maxCoeff(), 0.0);

  std::mt19937_64 rng(9);
  const SampleMatrix r = random_samples(rng, 6, 4);
  EXPECT_LE((total_cov(r) - moment_cov(r)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Covariances, SymmetricNonNegativeDiagonalPermutationInvariant)
{
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + static_cast<int>(rng() % 10);
    const int d = 1 + static_cast<int>(rng() % 6);
    const SampleMatrix s = random_samples(rng, k, d);
    for (const Eigen::MatrixXd & m : {epistemic_cov(s), aleatoric_cov(s)}) {
      EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
      EXPECT_GE(m.diagonal().minCoeff(), -1e-15);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd shuffled(k, d);
    for (int i = 0; i < k; ++i) {
      shuffled.row(i) = s.rows().row(perm[static_cast<std::size_t>(i)]);
    }
    const SampleMatrix p(shuffled, SampleMatrix::RowKind::kCategorical);
    EXPECT_LE((epistemic_cov(p) - epistemic_cov(s)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((aleatoric_cov(p) - aleatoric_cov(s)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(SampleMatrix, RejectsInvalidRows)
{
  Eigen::MatrixXd bad(1, 2);
  bad << 0.7, 0.7;
  EXPECT_THROW(SampleMatrix(bad, SampleMatrix::RowKind::kCategorical), Error);
  EXPECT_NO_THROW(SampleMatrix(bad, SampleMatrix::RowKind::kBernoulli));
  bad << 1.2, -0.2;
  EXPECT_THROW(SampleMatrix(bad, SampleMatrix::RowKind::kCategorical), Error);
  EXPECT_THROW(SampleMatrix(Eigen::MatrixXd(0, 2), SampleMatrix::RowKind::kBernoulli), Error);
}

TEST(Fuse, IdenticalMembers)
{
  const Detection d = make_det(const_mask(1, 2, 3, 4, 0.7), {0.1, 0.9}, 0);
  Detection d2 = d;
  d2.sample_index = 1;
  const Extent ext{8, 8};
  const Observation o = fuse(cluster_of({d, d2}), ext);
  EXPECT_EQ(o.k, 2u);
  EXPECT_EQ(o.bbox_mean, d.bbox);
  EXPECT_EQ(o.class_probs_mean.raw(), d.class_probs.raw());
  EXPECT_EQ(o.mask_mean.footprint(), (Window{1, 2, 3, 4}));
  for (double v : o.mask_mean.grid.values()) {
    EXPECT_DOUBLE_EQ(v, 0.7);
  }
  for (double v : o.uncertainty.spatial_epistemic.values.values()) {
    EXPECT_EQ(v, 0.0);
  }
  for (double v : o.uncertainty.spatial_aleatoric.values.values()) {
    EXPECT_NEAR(v, 0.21, 1e-15);
  }
  EXPECT_EQ(o.uncertainty.semantic_epistemic, 0.0);
  EXPECT_NEAR(o.uncertainty.semantic_aleatoric, 2 * 0.09, 1e-15);
}

TEST(Fuse, BoxMidpoint)
{
  Detection a = make_det(const_mask(0, 0, 10, 10, 1.0), {1.0, 0.0}, 0);
  Detection b = make_det(const_mask(2, 2, 10, 10, 1.0), {1.0, 0.0}, 1);
  const Observation o = fuse(cluster_of({a, b}), Extent{20, 20});
  EXPECT_EQ(o.bbox_mean, (BBox{1.0, 1.0, 10.0, 10.0}));
  EXPECT_EQ(o.mask_mean.footprint(), (Window{0, 0, 12, 12}));
  EXPECT_DOUBLE_EQ(o.mask_mean.grid(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(o.mask_mean.grid(5, 5), 1.0);
  EXPECT_DOUBLE_EQ(o.uncertainty.spatial_epistemic.values(0, 0), 0.25);
}

TEST(Fuse, TwoMembersPixelMoments)
{
  const Detection a = make_det(const_mask(0, 0, 2, 2, 0.2), {0.6, 0.4}, 0);
  const Detection b = make_det(const_mask(0, 0, 2, 2, 0.8), {0.6, 0.4}, 1);
  const Observation o = fuse(cluster_of({a, b}), Extent{4, 4});
  EXPECT_DOUBLE_EQ(o.mask_mean.grid(1, 1), 0.5);
  EXPECT_NEAR(o.uncertainty.spatial_epistemic.values(1, 1), 0.09, 1e-15);
  EXPECT_NEAR(o.uncertainty.spatial_aleatoric.values(1, 1), 0.16, 1e-15);

  const SpatialUncertainty su = spatial_uncertainty(cluster_of({a, b}), Extent{4, 4});
  EXPECT_NEAR(su.epistemic.values(0, 1), 0.09, 1e-15);
  EXPECT_NEAR(su.aleatoric.values(0, 1), 0.16, 1e-15);
}

TEST(Fuse, SingleDeterministicMemberHasNoAleatoric)
{
  Grid g(3, 3, 0.0);
  g(1, 1) = 1.0;
  g(0, 2) = 1.0;
  const Observation o = fuse(cluster_of({make_det(ProbMask::identity(0, 0, g), {0.0, 1.0}, 0)}), Extent{3, 3});
  for (double v : o.uncertainty.spatial_aleatoric.values.values()) {
    EXPECT_EQ(v, 0.0);
  }
  for (double v : o.uncertainty.spatial_epistemic.values.values()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(SemanticUncertainty, Traces)
{
  const auto one_hot = semantic_uncertainty(cluster_of(
    {make_det(const_mask(0, 0, 2, 2, 1.0), {1.0, 0.0}, 0), make_det(const_mask(0, 0, 2, 2, 1.0), {0.0, 1.0}, 1)}));
  EXPECT_EQ(one_hot.epistemic_trace, 0.5);
  EXPECT_EQ(one_hot.aleatoric_trace, 0.0);
  const auto half = semantic_uncertainty(cluster_of({make_det(const_mask(0, 0, 2, 2, 1.0), {0.5, 0.5}, 0)}));
  EXPECT_EQ(half.aleatoric_trace, 0.5);
  EXPECT_EQ(half.epistemic_trace, 0.0);
}

TEST(Fuse, MemberOrderDoesNotMatter)
{
  std::mt19937_64 rng(3);
  std::vector<Detection> dets;
  for (int m = 0; m < 5; ++m) {
    dets.push_back(make_det(
      ProbMask::identity(static_cast<int>(rng() % 3), static_cast<int>(rng() % 3), affuq::testing::random_grid(rng, 5, 6, 1.0)),
      affuq::testing::random_simplex(rng, 3), m));
  }
  const Extent ext{10, 10};
  const Observation a = fuse(cluster_of(dets), ext);
  std::reverse(dets.begin(), dets.end());
  const Observation b = fuse(cluster_of(dets), ext);
  EXPECT_EQ(a.mask_mean.footprint(), b.mask_mean.footprint());
  for (std::size_t i = 0; i < a.mask_mean.grid.size(); ++i) {
    EXPECT_NEAR(a.mask_mean.grid.raw()[i], b.mask_mean.grid.raw()[i], 1e-15);
    EXPECT_NEAR(a.uncertainty.spatial_epistemic.values.raw()[i], b.uncertainty.spatial_epistemic.values.raw()[i], 1e-15);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(a.class_probs_mean[c], b.class_probs_mean[c], 1e-15);
  }
  EXPECT_NEAR(a.bbox_mean.x, b.bbox_mean.x, 1e-12);
  EXPECT_NEAR(a.uncertainty.semantic_epistemic, b.uncertainty.semantic_epistemic, 1e-15);
}

TEST(Fuse, PassCountDenominator)
{
  const Detection a = make_det(const_mask(0, 0, 2, 2, 0.8), {1.0, 0.0}, 0);
  const Detection b = make_det(const_mask(0, 0, 2, 2, 0.4), {1.0, 0.0}, 1);
  FusionConfig cfg;
  cfg.denominator = AveragingDenominator::kPassCount;
  cfg.passes = 4;
  const Observation o = fuse(cluster_of({a, b}), Extent{4, 4}, cfg);
  // samples {0.8, 0.4, 0, 0}
  EXPECT_NEAR(o.mask_mean.grid(0, 0), 0.3, 1e-15);
  EXPECT_NEAR(o.uncertainty.spatial_epistemic.values(0, 0), (0.25 + 0.01 + 0.09 + 0.09) / 4.0, 1e-15);
  EXPECT_NEAR(o.uncertainty.spatial_aleatoric.values(0, 0), (0.16 + 0.24) / 4.0, 1e-15);
  EXPECT_DOUBLE_EQ(o.class_probs_mean[0], 1.0);

  cfg.passes = 1;
  EXPECT_THROW(fuse(cluster_of({a, b}), Extent{4, 4}, cfg), Error);
  EXPECT_THROW(fuse(ObservationCluster{}, Extent{4, 4}), Error);
}
