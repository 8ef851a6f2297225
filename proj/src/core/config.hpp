// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "core/data_io.hpp"
#include "core/model.hpp"
#include "core/pipeline.hpp"

namespace voxtrack {

struct SynthRunConfig {
  SyntheticSceneConfig scene;
  int sequences = 20;
  int frames = 20;
  std::uint64_t seed = 1;
};

struct EvalConfig {
  std::vector<double> sparsity_edges;
  std::vector<double> distractor_edges;
};

struct BenchConfig {
  int warmup = 5;
  int frames = 50;
  std::uint64_t seed = 3;
};

/// Every tunable of a run. Serialized as a JSON object with sections
/// `model`, `train`, `synth`, `eval`, `bench`; unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SynthRunConfig synth;
  EvalConfig eval;
  BenchConfig bench;

  void validate() const;
};

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg);
/// Missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// `key` is a dotted path such as `model.voxel.voxel_size`; `value` is
/// parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& key, const std::string& value);
/// Splits "key=value" and applies it.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Loads `path` (empty = defaults), applies overrides and validates.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace voxtrack
