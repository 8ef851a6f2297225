// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "core/error.hpp"
#include "core/pipeline.hpp"

namespace voxtrack {

BenchResult run_bench(const Model& model, const SyntheticSceneConfig& scene, int frames,
                      int warmup, int reps) {
  if (frames < 1 || warmup < 0 || reps < 1) throw InvalidArgument("invalid bench parameters");
  const SyntheticSequence syn = generate_synthetic(scene, frames + 1);
  const auto& seq = syn.seq;

  // Steps always start from ground truth so each pass sees the same inputs.
  auto step = [&](std::size_t f) {
    return track_step(init_tracker(seq.gt_boxes[f - 1]), seq.frames[f - 1], seq.frames[f], model);
  };
  for (int w = 0; w < warmup; ++w) step(1 + static_cast<std::size_t>(w) % (seq.frames.size() - 1));

  BenchResult r;
  r.frames_per_rep = frames;
  for (int rep = 0; rep < reps; ++rep) {
    int fb = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t f = 1; f < seq.frames.size(); ++f) fb += step(f).fallbacks.back() ? 1 : 0;
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.rep_fps.push_back(dt > 0.0 ? r.frames_per_rep / dt : 0.0);
    r.fallbacks = fb;
  }
  std::vector<double> sorted = r.rep_fps;
  std::sort(sorted.begin(), sorted.end());
  r.median_fps = sorted[sorted.size() / 2];
  r.min_fps = sorted.front();
  r.max_fps = sorted.back();
  return r;
}

std::string format_bench_record(const BenchResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"type\":\"bench\",\"frames_per_rep\":%d,\"reps\":%zu,\"median_fps\":%.3f,"
                "\"min_fps\":%.3f,\"max_fps\":%.3f,\"fallbacks\":%d}\n",
                r.frames_per_rep, r.rep_fps.size(), r.median_fps, r.min_fps, r.max_fps,
                r.fallbacks);
  return buf;
}

}  // namespace voxtrack
