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

#include <optional>
#include <string>
#include <string_view>

#include "affuq/pmq.hpp"
#include "affuq/calibration.hpp"
#include "affuq/dataset_io.hpp"
#include "affuq/simulator.hpp"

namespace affuq
{

/// Environment variable that overrides the configured simulator seed.
inline constexpr const char * kSeedEnvVar = "AFFUQ_SEED";

/// Reads the TOML subset used by config files: `[table]` / `[a.b]` headers,
/// `key = value` with strings, integers, floats, booleans and flat arrays,
/// and `#` comments. Throws kParse with the line number on anything else.
nlohmann::json parse_toml(std::string_view text, const std::string & source = "<toml>");

/// Loads a `.json` or `.toml` config file (a leading `{` also selects JSON).
nlohmann::json load_config_file(const std::string & path);

/// Simulator settings live at the top level of a config document; the
/// optional `fuse` and `eval` tables are skipped. Missing keys keep their
/// defaults; unknown keys are rejected with kInvalidArgument.
SimConfig sim_config_from_json(const nlohmann::json & doc);
nlohmann::json sim_config_to_json(const SimConfig & cfg);

/// Seed precedence: flag > AFFUQ_SEED > config file > default.
void apply_seed_overrides(SimConfig & cfg, std::optional<std::uint64_t> flag_seed);

struct EvalSettings
{
  PmqConfig pmq;
  int n_bins{10};
  SparsificationConfig sparsification;
};

nlohmann::json eval_settings_to_json(const EvalSettings & settings);

/// Settings from the optional `fuse` / `eval` tables of a config document.
FuseSettings fuse_settings_from_config(const nlohmann::json & doc);
EvalSettings eval_settings_from_config(const nlohmann::json & doc);

}  // namespace affuq
