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

#include "affuq/assignment.hpp"

#include <algorithm>
#include <limits>

#include "affuq/error.hpp"

namespace affuq
{

std::vector<int> max_weight_assignment(const Eigen::MatrixXd & score)
{
  const auto rows = static_cast<int>(score.rows());
  const auto cols = static_cast<int>(score.cols());
  std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) {
    return row_to_col;
  }
  if (!score.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "assignment scores must be finite");
  }

  // Minimize cost = max - score on the padded n x n problem; padding cells
  // cost `max`, i.e. they behave like a zero score.
  const int n = std::max(rows, cols);
  const double top = std::max(0.0, score.maxCoeff());
  auto cost = [&](int i, int j) { return (i < rows && j < cols) ? top - score(i, j) : top; };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) {
          continue;
        }
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= n; ++j) {
    const int i = match[j] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) {
      row_to_col[static_cast<std::size_t>(i)] = j - 1;
    }
  }
  return row_to_col;
}

}  // namespace affuq
