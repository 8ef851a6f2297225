// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "core/geometry.hpp"

namespace voxtrack {

struct VoxelCoord {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t k = 0;

  friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
};

/// Grid extent along (W, L, H), i.e. the x, y and z axes.
using GridDims = std::array<int, 3>;

/// Number of cells covering `span` with edge `edge`. Quotients within 1e-9 of
/// an integer are snapped before rounding up, so 6.4 / 0.1 yields 64.
int cells_for_span(double span, double edge);

/// Ceiling division of every axis.
GridDims ceil_div(const GridDims& dims, int factor);

struct VoxelizerConfig {
  std::array<double, 3> voxel_size{0.1, 0.1, 0.1};
  std::array<double, 3> extent_min{-3.2, -3.2, -2.0};
  std::array<double, 3> extent_max{3.2, 3.2, 2.0};
  double scale_ratio = 2.0;

  /// Throws ConfigError for non-positive sizes, empty extents or ratio <= 1.
  void validate() const;
  GridDims dims() const;
  /// Same extent with every voxel edge multiplied by `scale_ratio`.
  VoxelizerConfig large() const;
};

/// Sparse voxel occupancy with per-voxel features, stored in sorted
/// coordinate order.
///
/// A grid fresh from `voxelize` still carries the raw per-point channels
/// (`point_values`, `point_rows`) and has no per-voxel features yet;
/// `encode_dynamic` fills `features`. Grids produced by `fuse_frames` keep
/// only the per-voxel features.
struct VoxelGrid {
  GridDims dims{1, 1, 1};
  std::size_t channels = 3;
  std::vector<VoxelCoord> coords;
  std::vector<double> features;  // coords.size() x channels, row-major
  std::vector<std::int64_t> point_counts;
  std::vector<double> point_values;  // retained points: n_points x channels
  std::vector<std::size_t> point_rows;  // voxel row of each retained point
  std::size_t dropped_points = 0;

  std::size_t size() const { return coords.size(); }
  bool has_features() const { return features.size() == coords.size() * channels; }
  std::int64_t total_points() const;
  const double* feature(std::size_t row) const { return features.data() + row * channels; }
};

/// Voxel index of a single point, or false when outside the extent.
bool voxel_index(const Vec3& p, const std::array<double, 3>& extent_min,
                 const std::array<double, 3>& voxel_size, const GridDims& dims, VoxelCoord* out);

VoxelGrid voxelize(const PointCloud& cloud, const VoxelizerConfig& cfg);
VoxelGrid encode_dynamic(const VoxelGrid& grid);
VoxelGrid fuse_frames(const VoxelGrid& prev, const VoxelGrid& cur);

struct DualVoxelGrids {
  VoxelGrid large;
  VoxelGrid small;
};

DualVoxelGrids dual_voxelize(const PointCloud& prev, const PointCloud& cur,
                             const VoxelizerConfig& cfg);

}  // namespace voxtrack
