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

#include <vector>

#include <Eigen/Dense>

namespace affuq
{

/// Optimal rectangular assignment maximizing the summed score.
///
/// Returns, for every row, the matched column or -1. With more rows than
/// columns some rows stay unmatched (and vice versa). O(n^3) shortest
/// augmenting path on the square zero-padded problem.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd & score);

}  // namespace affuq
