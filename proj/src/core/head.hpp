// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "core/autodiff.hpp"
#include "core/geometry.hpp"
#include "core/sparse.hpp"

namespace voxtrack {

struct HeadConfig {
  std::vector<std::size_t> hidden{128};
  /// log_sigma = min + (max - min) * sigmoid(raw) keeps the scale bounded,
  /// which gives the likelihood loss a finite floor.
  double log_sigma_min = -5.0;
  double log_sigma_max = 2.0;

  void validate() const;
};

enum class LossVariant { kRle, kL1 };

/// Predicted offset mean and per-dimension log scale, both shape (4).
struct OffsetPrediction {
  ad::Tensor mu;
  ad::Tensor log_sigma;

  BoxOffset offset() const;
};

/// Dense (W, L, C * H) view of `x`; BEV channel index is k * C + c.
ad::Tensor to_bev(const SparseTensor3D& x);

void register_head(ad::ParamStore& store, std::size_t bev_channels, const HeadConfig& cfg,
                   std::mt19937_64& rng);

/// Channelwise global max over BEV sites, then MLP to 8 outputs
/// (4 offsets, 4 raw scales).
OffsetPrediction head_forward(const ad::Tensor& bev, const ad::ParamStore& params,
                              const HeadConfig& cfg);

/// Negative log-likelihood under a Laplace density per dimension:
///   sum_d |r_d| / sigma_d + log_sigma_d + log 2,  r_d = label_d - mu_d,
/// with the yaw residual wrapped to (-pi, pi]. The L1 variant drops the
/// scale: sum_d |r_d|.
ad::Tensor rle_loss(const OffsetPrediction& pred, const BoxOffset& label,
                    LossVariant variant = LossVariant::kRle);

}  // namespace voxtrack
