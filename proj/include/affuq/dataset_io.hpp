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

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "affuq/clustering.hpp"
#include "affuq/core_model.hpp"
#include "affuq/fusion.hpp"

namespace affuq
{

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Rounds to 9 significant digits, the precision every file is written with.
double round_sig9(double value);

/// Parses JSON text; syntax errors become kParse with line and column.
json parse_json_text(std::string_view text, const std::string & source);
json read_json_file(const std::string & path);
std::string read_text_file(const std::string & path);
void write_text_file(const std::string & path, std::string_view text);

/// Compact canonical dump, newline-terminated.
std::string dump_compact(const json & doc);
/// Indented dump for human-facing reports, newline-terminated.
std::string dump_pretty(const json & doc);

// ---------------------------------------------------------------------------
// Dataset files

struct DatasetDocument
{
  Dataset dataset;
  json generator;  // simulator config echo, null for external data
};

json dataset_to_json(const Dataset & dataset, const json & generator = nullptr);
/// Throws kSchema with the offending field path.
DatasetDocument dataset_from_json(const json & doc);

// ---------------------------------------------------------------------------
// Observation files

struct FuseSettings
{
  ClusteringConfig clustering;
  FusionConfig fusion;  // `passes` is filled per frame
};

json fuse_settings_to_json(const FuseSettings & settings);
FuseSettings fuse_settings_from_json(const json & doc);

struct FrameObservations
{
  std::string frame_id;
  std::size_t passes{0};
  std::vector<Observation> observations;
};

struct ObservationSet
{
  std::vector<std::string> classes;
  bool background_class{false};
  Extent extent;
  FuseSettings settings;
  json source;  // generator echo carried over from the dataset
  std::vector<FrameObservations> frames;

  std::size_t prob_dim() const noexcept { return classes.size() + (background_class ? 1 : 0); }
};

json observations_to_json(const ObservationSet & set);
ObservationSet observations_from_json(const json & doc);

}  // namespace affuq
