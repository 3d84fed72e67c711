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

#include "affuq/rle.hpp"

#include <string>

namespace affuq
{

std::vector<std::uint32_t> rle_encode(const BinaryMask & mask)
{
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int c = 0; c < mask.cols(); ++c) {
    for (int r = 0; r < mask.rows(); ++r) {
      const std::uint8_t v = mask(r, c) != 0 ? 1 : 0;
      if (v != current) {
        counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

BinaryMask rle_decode(std::span<const std::uint32_t> counts, int rows, int cols)
{
  BinaryMask mask(rows, cols);
  const std::uint64_t total = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : counts) {
    if (pos + run > total) {
      throw Error(ErrorKind::kSchema, "RLE runs exceed the declared " + std::to_string(rows) + "x" + std::to_string(cols) + " extent");
    }
    for (std::uint32_t k = 0; k < run; ++k, ++pos) {
      if (value) {
        mask(static_cast<int>(pos % static_cast<std::uint64_t>(rows)), static_cast<int>(pos / static_cast<std::uint64_t>(rows))) = 1;
      }
    }
    value ^= 1;
  }
  if (pos != total) {
    throw Error(ErrorKind::kSchema, "RLE runs cover " + std::to_string(pos) + " of " + std::to_string(total) + " pixels");
  }
  return mask;
}

}  // namespace affuq
