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
#include <set>

#include "affuq/assignment.hpp"

using affuq::max_weight_assignment;

namespace
{

// Exhaustive maximum over injective maps from the smaller side to the larger.
double brute_force_max(const Eigen::MatrixXd & s)
{
  const bool transpose = s.rows() > s.cols();
  const Eigen::MatrixXd m = transpose ? Eigen::MatrixXd(s.transpose()) : s;
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = 0.0;
  do {
    double total = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      total += m(r, cols[static_cast<std::size_t>(r)]);
    }
    best = std::max(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

double assigned_total(const Eigen::MatrixXd & s, const std::vector<int> & a)
{
  double total = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] >= 0) {
      total += s(static_cast<Eigen::Index>(r), a[r]);
    }
  }
  return total;
}

}  // namespace

TEST(MaxWeightAssignment, Examples)
{
  Eigen::MatrixXd one(1, 1);
  one << 0.7;
  EXPECT_EQ(max_weight_assignment(one), std::vector<int>{0});

  Eigen::MatrixXd two(2, 2);
  two << 0.9, 0.1, 0.2, 0.8;
  EXPECT_EQ(max_weight_assignment(two), (std::vector<int>{0, 1}));
  EXPECT_NEAR(assigned_total(two, max_weight_assignment(two)), 1.7, 1e-15);

  Eigen::MatrixXd cross(2, 2);
  cross << 0.5, 0.6, 0.1, 0.9;
  EXPECT_EQ(max_weight_assignment(cross), (std::vector<int>{0, 1}));
}

TEST(MaxWeightAssignment, EmptyAndRectangular)
{
  EXPECT_TRUE(max_weight_assignment(Eigen::MatrixXd(0, 3)).empty());
  const auto a = max_weight_assignment(Eigen::MatrixXd::Zero(3, 0));
  EXPECT_EQ(a, (std::vector<int>{-1, -1, -1}));

  Eigen::MatrixXd tall(3, 1);
  tall << 0.1, 0.8, 0.3;
  EXPECT_EQ(max_weight_assignment(tall), (std::vector<int>{-1, 0, -1}));
}

TEST(MaxWeightAssignment, MatchesBruteForce)
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 300; ++t) {
    Eigen::MatrixXd s(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      s.data()[i] = u(rng) < 0.2 ? 0.0 : u(rng);
    }
    const auto a = max_weight_assignment(s);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(s.rows()));
    std::set<int> used;
    for (int c : a) {
      if (c >= 0) {
        EXPECT_TRUE(used.insert(c).second);
        EXPECT_LT(c, s.cols());
      }
    }
    EXPECT_EQ(used.size(), static_cast<std::size_t>(std::min(s.rows(), s.cols())));
    EXPECT_NEAR(assigned_total(s, a), brute_force_max(s), 1e-9);
  }
}
