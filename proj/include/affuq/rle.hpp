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

#include <cstdint>
#include <span>
#include <vector>

#include "affuq/core_model.hpp"

namespace affuq
{

/// Uncompressed COCO run-length encoding: column-major run lengths that
/// alternate background/foreground, always starting with a (possibly empty)
/// background run.
std::vector<std::uint32_t> rle_encode(const BinaryMask & mask);

/// Throws kSchema when the runs do not cover exactly rows * cols pixels.
BinaryMask rle_decode(std::span<const std::uint32_t> counts, int rows, int cols);

}  // namespace affuq
