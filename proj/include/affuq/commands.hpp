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
#include <vector>

#include "affuq/calibration.hpp"
#include "affuq/config.hpp"
#include "affuq/dataset_io.hpp"
#include "affuq/pmq.hpp"
#include "affuq/simulator.hpp"

namespace affuq
{

/// Clusters and fuses every frame. Throws kSchema when a frame has no passes.
ObservationSet run_fuse(const Dataset & dataset, const FuseSettings & settings, const nlohmann::json & source = nullptr);

/// Per-pixel record of a matched observation, kept for diagnostics.
struct MatchedPixel
{
  std::string frame_id;
  std::size_t gt_index{0};
  int row{0};
  int col{0};
  PixelRecord record;
  double aleatoric{0.0};
  double epistemic{0.0};
};

struct EvalOutcome
{
  PMQResult pmq;
  std::vector<SemanticRecord> semantic;
  std::vector<PixelRecord> spatial;
  std::optional<SparsificationCurve> semantic_curve;
  std::optional<SparsificationCurve> spatial_curve;
  nlohmann::json report;
};

/// Scores observations against the ground truth of `dataset`.
/// Throws kAlignment when the frame ids of the two inputs differ and
/// kUndefinedMetric when PMQ has no denominator.
EvalOutcome run_eval(const ObservationSet & observations, const DatasetDocument & truth, const EvalSettings & settings);

/// Every pixel of every true-positive observation footprint, with its spatial
/// moments; used by tests and diagnostics.
std::vector<MatchedPixel> matched_pixels(
  const ObservationSet & observations, const Dataset & truth, const EvalOutcome & outcome);

/// `fraction,model,oracle` rows with 6 decimals.
std::string curve_csv(const SparsificationCurve & curve);

struct PipelineArtifacts
{
  std::string dataset_json;
  std::string observations_json;
  std::string report_json;
  std::optional<std::string> semantic_csv;
  std::optional<std::string> spatial_csv;
  EvalOutcome outcome;
};

/// simulate -> fuse -> eval, passing each stage through its serialized form
/// so the result equals running the three commands separately.
PipelineArtifacts run_pipeline(const SimConfig & sim, const FuseSettings & fuse, const EvalSettings & eval);

}  // namespace affuq
