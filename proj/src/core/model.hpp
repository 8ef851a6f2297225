// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "core/autodiff.hpp"
#include "core/backbone.hpp"
#include "core/head.hpp"
#include "core/voxelization.hpp"

namespace voxtrack {

struct ModelConfig {
  VoxelizerConfig voxel;
  BackboneConfig backbone;
  HeadConfig head;
  double crop_margin = 2.0;
  LossVariant loss = LossVariant::kRle;

  /// Also checks that the voxel ratio is the integer the backbone uses.
  void validate() const;
  /// Grid of the final fused volume.
  GridDims output_dims() const;
  std::size_t bev_channels() const;
};

/// Network parameters plus the architecture needed to run them.
class Model {
 public:
  static Model create(const ModelConfig& cfg, std::uint64_t seed);
  /// Reads the architecture from the checkpoint metadata.
  static Model load(const std::string& path);
  static Model from_bytes(const std::string& bytes);
  void save(const std::string& path) const;
  std::string to_bytes() const;

  const ModelConfig& config() const { return cfg_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  /// Zeroes the head's output layer so every prediction is mu = 0.
  void zero_output();

  OffsetPrediction forward(const DualVoxelGrids& grids, BackboneTrace* trace = nullptr) const;
  /// Both clouds already cropped and expressed in the reference-box frame.
  OffsetPrediction forward(const PointCloud& prev, const PointCloud& cur) const;

 private:
  Model(ModelConfig cfg, ad::ParamStore params) : cfg_(std::move(cfg)), params_(std::move(params)) {}

  ModelConfig cfg_;
  ad::ParamStore params_;
};

}  // namespace voxtrack
