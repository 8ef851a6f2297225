// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "core/data_io.hpp"
#include "core/model.hpp"

namespace voxtrack {

struct BenchResult {
  int frames_per_rep = 0;
  std::vector<double> rep_fps;
  double median_fps = 0.0;
  double min_fps = 0.0;
  double max_fps = 0.0;
  int fallbacks = 0;
};

/// Times track_step over a synthetic sequence: `warmup` untimed steps,
/// then `reps` timed passes of `frames` steps each.
BenchResult run_bench(const Model& model, const SyntheticSceneConfig& scene, int frames,
                      int warmup, int reps = 5);

std::string format_bench_record(const BenchResult& r);

}  // namespace voxtrack
