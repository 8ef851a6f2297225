// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/geometry.hpp"
#include "core/model.hpp"

namespace voxtrack {

struct TrackerState {
  Box3D current_box;
  int frame_index = 0;
  std::vector<Box3D> history;
  /// One flag per history entry; true when the box was carried over.
  std::vector<bool> fallbacks;
};

TrackerState init_tracker(const Box3D& first_box);

/// Crops both clouds around state.current_box, regresses the offset and
/// applies it. When the current crop holds no voxel inside the grid the box
/// is carried over and the step is flagged.
TrackerState track_step(const TrackerState& state, const PointCloud& prev_cloud,
                        const PointCloud& cur_cloud, const Model& model);

struct TrackResult {
  std::vector<Box3D> boxes;  // frames 1..T-1
  std::vector<bool> fallbacks;
};

TrackResult track_sequence(const TrackedSequence& seq, const Model& model);
/// Pulls frame f only after frame f-1 has been tracked. `first_box` seeds
/// frame 0; `frame(f)` is called for f = 0, 1, ... up to num_frames - 1.
TrackResult track_sequence(const Box3D& first_box, int num_frames,
                           const std::function<PointCloud(int)>& frame, const Model& model);

struct TrainSample {
  PointCloud prev_cloud;  // cropped and in the jittered previous-box frame
  PointCloud cur_cloud;
  BoxOffset label;
  std::string category;
  Box3D ref_box;  // jittered previous box
  Box3D cur_box;  // ground truth
  std::size_t prev_points = 0;
  std::size_t cur_points = 0;
};

struct JitterConfig {
  double translation = 0.3;  // per axis, meters
  double yaw = 0.1;          // radians
};

struct SampleStats {
  std::size_t emitted = 0;
  std::size_t skipped = 0;  // both crops empty
};

std::vector<TrainSample> make_train_samples(const TrackedSequence& seq, std::uint64_t rng_seed,
                                            double crop_margin, const JitterConfig& jitter = {},
                                            SampleStats* stats = nullptr);

struct TrainConfig {
  int epochs = 20;
  ad::AdamConfig adam{};
  /// Cosine decay from adam.lr to lr_min over the run.
  double lr_min = 1e-5;
  /// Samples per optimizer step; gradients are averaged.
  int accumulate = 1;
  int max_steps = 0;  // 0 = no cap
  std::uint64_t seed = 1;
  std::uint64_t init_seed = 7;
  JitterConfig jitter{};
  /// Redraw jitter every epoch instead of once.
  bool resample_each_epoch = true;
  std::string checkpoint_path;  // empty = none
  std::string log_path;         // line-delimited epoch records; empty = none

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_time = 0.0;
  std::int64_t steps = 0;
  std::size_t samples = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t skipped_pairs = 0;
};

/// Loss of one sample; backward is run when `accumulate_grad`.
double sample_loss(const Model& model, const TrainSample& s, bool accumulate_grad);

/// Adam over shuffled samples from every sequence. Aborts with NumericError,
/// naming the offending sample, on a non-finite loss.
TrainReport train(Model& model, const std::vector<TrackedSequence>& dataset,
                  const TrainConfig& cfg);
/// Trains on a fixed sample list, reused every epoch.
TrainReport train_on_samples(Model& model, const std::vector<TrainSample>& samples,
                             const TrainConfig& cfg);

}  // namespace voxtrack
