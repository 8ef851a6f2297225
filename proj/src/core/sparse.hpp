// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "core/autodiff.hpp"
#include "core/voxelization.hpp"

namespace voxtrack {

/// Coordinate-indexed sparse feature volume.
///
/// Coordinates are kept sorted and unique; row r of the (n x C) feature
/// tensor belongs to coords()[r]. Every kernel iterates rows in this order,
/// which fixes the floating-point reduction order. Instances are immutable.
class SparseTensor3D {
 public:
  SparseTensor3D() = default;
  /// Validates bounds, ordering and the feature shape.
  SparseTensor3D(GridDims dims, std::size_t channels, std::vector<VoxelCoord> coords,
                 ad::Tensor features);

  static SparseTensor3D empty(GridDims dims, std::size_t channels);
  /// Constant (non-differentiable) features taken from an encoded grid.
  static SparseTensor3D from_grid(const VoxelGrid& grid);

  const GridDims& dims() const { return dims_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return coords_->size(); }
  bool empty() const { return coords_->empty(); }
  const std::vector<VoxelCoord>& coords() const { return *coords_; }
  const ad::Tensor& features() const { return features_; }

  /// Row of `c`, or -1 when unoccupied or outside the grid.
  std::int64_t find(const VoxelCoord& c) const;
  bool in_bounds(const VoxelCoord& c) const;
  /// Same occupancy with new (n x C') features.
  SparseTensor3D with_features(ad::Tensor features) const;

 private:
  std::int64_t key(const VoxelCoord& c) const;

  GridDims dims_{1, 1, 1};
  std::size_t channels_ = 0;
  std::shared_ptr<const std::vector<VoxelCoord>> coords_ =
      std::make_shared<const std::vector<VoxelCoord>>();
  std::shared_ptr<const std::unordered_map<std::int64_t, std::int32_t>> index_ =
      std::make_shared<const std::unordered_map<std::int64_t, std::int32_t>>();
  ad::Tensor features_;
};

enum class ConvMode { kSubmanifold, kStrided };

struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  int kernel = 3;
  int stride = 1;
  ConvMode mode = ConvMode::kSubmanifold;

  void validate() const;
  int padding() const { return (kernel - 1) / 2; }
  std::size_t kernel_volume() const {
    return static_cast<std::size_t>(kernel) * kernel * kernel;
  }
};

/// Sparse 3D convolution. Output position p gathers input sites
/// p * stride + d - padding for kernel offsets d in [0, kernel)^3, with
/// weights laid out as (kernel^3, in, out) and offsets flattened as
/// (dx * k + dy) * k + dz. Strided output dims are ceil(dims / stride).
SparseTensor3D sparse_conv(const SparseTensor3D& x, const ConvSpec& spec, const ad::Tensor& weights,
                           const ad::Tensor& bias);

/// Block mean over occupied entries. Output dims ceil(dims / factor).
SparseTensor3D avg_pool(const SparseTensor3D& x, int factor);
/// Block channelwise max; ties go to the lowest sorted coordinate.
SparseTensor3D max_pool(const SparseTensor3D& x, int factor);

/// Trilinear interpolation of the zero-filled coarse volume at the centers
/// of `target` sites (voxel-center alignment, edge-clamped). `target_dims`
/// must satisfy ceil(target_dims / factor) == x.dims(); `target` must be
/// sorted, unique and within bounds.
SparseTensor3D upsample_lerp(const SparseTensor3D& x, int factor, const GridDims& target_dims,
                             const std::vector<VoxelCoord>& target);

/// Union occupancy, channels [a | b], missing side zero-filled.
SparseTensor3D concat_channels(const SparseTensor3D& a, const SparseTensor3D& b);

SparseTensor3D sparse_relu(const SparseTensor3D& x);

/// Dense (W, L, H, C) tensor, zeros at unoccupied sites.
ad::Tensor densify(const SparseTensor3D& x);
/// Sites with any nonzero channel. Values only; no gradient link.
SparseTensor3D sparsify(const std::vector<double>& dense, const GridDims& dims, std::size_t channels);

}  // namespace voxtrack
