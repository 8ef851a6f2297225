// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

// Small model configurations and scene helpers for tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "core/data_io.hpp"
#include "core/geometry.hpp"
#include "core/model.hpp"

namespace fixture {

/// 8^3 small grid, 4^3 large grid, two stages of width 2 and 4.
inline voxtrack::ModelConfig tiny_model() {
  voxtrack::ModelConfig m;
  m.voxel.voxel_size = {0.5, 0.5, 0.5};
  m.voxel.extent_min = {-2.0, -2.0, -2.0};
  m.voxel.extent_max = {2.0, 2.0, 2.0};
  m.backbone.num_stages = 2;
  m.backbone.base_channels = 2;
  m.backbone.convs_per_stage = 1;
  m.head.hidden = {8};
  return m;
}

/// The configuration the learning checks train: 0.2 m voxels, width 4.
inline voxtrack::ModelConfig compact_model() {
  voxtrack::ModelConfig m;
  m.voxel.voxel_size = {0.2, 0.2, 0.2};
  m.backbone.base_channels = 4;
  return m;
}

/// Uniform points in a cube of half-edge `r` around `c`.
inline voxtrack::PointCloud cloud_around(std::mt19937_64& rng, const voxtrack::Vec3& c, double r, int n) {
  std::uniform_real_distribution<double> u(-r, r);
  voxtrack::PointCloud out;
  for (int i = 0; i < n; ++i) out.push_back({c.x + u(rng), c.y + u(rng), c.z + u(rng)});
  return out;
}

/// Fresh empty directory under `root`.
inline std::string scratch_dir(const std::string& root, const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(root) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace fixture
