// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/sparse.hpp"
#include "core/voxelization.hpp"

namespace voxtrack {

enum class Downsampler { kAvg, kMax };
enum class FusionDirection { kBidirectional, kSmallToLarge };

struct BackboneConfig {
  int num_stages = 3;
  int base_channels = 16;
  Downsampler fusion_downsampler = Downsampler::kMax;
  /// One flag per stage; empty means every stage fuses.
  std::vector<bool> fusion_stages;
  int scale_ratio = 2;
  int in_channels = 6;
  int convs_per_stage = 2;

  void validate() const;
  bool fusion_enabled(int stage) const;
  /// Channel width entering stage `stage` (1-based); base * 2^(stage-1).
  std::size_t stage_in_channels(int stage) const;
  std::size_t output_channels() const;
};

/// Both streams at one stage boundary. `small` has the finer grid, with
/// ceil(small.dims / scale_ratio) == large.dims.
struct StageFeatures {
  SparseTensor3D large;
  SparseTensor3D small;
};

/// Dims and channels of one stream entering and leaving a stage.
struct StageShape {
  int stage = 0;
  std::string stream;
  GridDims in_dims{};
  std::size_t in_channels = 0;
  GridDims out_dims{};
  std::size_t out_channels = 0;
};

struct BackboneTrace {
  std::vector<StageShape> stages;
  /// Stream features right after each stage_forward, before fusion.
  std::vector<StageFeatures> pre_fusion;
};

void register_backbone(ad::ParamStore& store, const BackboneConfig& cfg, std::mt19937_64& rng);

/// Submanifold stem lifting the fused voxel channels to base_channels.
StageFeatures stem_forward(const StageFeatures& input, const ad::ParamStore& params,
                           const BackboneConfig& cfg);

/// `convs_per_stage` submanifold 3^3 convs then a stride-2 3^3 conv per
/// stream. Throws ShapeError unless each stream halves (ceil) its dims and
/// doubles its channels.
StageFeatures stage_forward(const StageFeatures& feats, int stage, const ad::ParamStore& params,
                            const BackboneConfig& cfg, BackboneTrace* trace = nullptr);

/// Cross-stream exchange at the end of `stage`. The small stream is pooled
/// onto the large grid and concatenated there; in bidirectional mode the
/// large stream is also interpolated onto the small stream's occupancy.
/// Each concatenation is mixed back to the stream width by a 1^3 conv.
StageFeatures cif_fuse(const StageFeatures& feats, int stage, const ad::ParamStore& params,
                       FusionDirection direction, const BackboneConfig& cfg);

/// Full encoder; returns the fused large-stream volume with
/// base_channels * 2^num_stages channels.
SparseTensor3D backbone_forward(const VoxelGrid& large, const VoxelGrid& small,
                                const ad::ParamStore& params, const BackboneConfig& cfg,
                                BackboneTrace* trace = nullptr);

}  // namespace voxtrack
