// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/head.hpp"

#include <cmath>

#include "core/error.hpp"

namespace voxtrack {

void HeadConfig::validate() const {
  if (!(log_sigma_max > log_sigma_min)) throw ConfigError("log_sigma_max must exceed log_sigma_min");
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("head hidden widths must be positive");
  }
}

BoxOffset OffsetPrediction::offset() const {
  const auto v = mu.values();
  return {v[0], v[1], v[2], normalize_yaw(v[3])};
}

ad::Tensor to_bev(const SparseTensor3D& x) {
  const auto& d = x.dims();
  return ad::reshape(densify(x), {static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[1]),
                                  static_cast<std::size_t>(d[2]) * x.channels()});
}

void register_head(ad::ParamStore& store, std::size_t bev_channels, const HeadConfig& cfg,
                   std::mt19937_64& rng) {
  cfg.validate();
  std::vector<std::size_t> widths{bev_channels};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(8);
  ad::register_mlp(store, "head.mlp", widths, rng);
}

OffsetPrediction head_forward(const ad::Tensor& bev, const ad::ParamStore& params,
                              const HeadConfig& cfg) {
  if (bev.shape().size() != 3) throw ShapeError("BEV feature must be (W, L, C)");
  const std::size_t sites = bev.shape()[0] * bev.shape()[1];
  const std::size_t c = bev.shape()[2];
  const ad::Tensor pooled = ad::max_rows(ad::reshape(bev, {sites, c}));
  const ad::Tensor out = ad::mlp_forward(pooled, params, "head.mlp", cfg.hidden.size() + 1);
  if (out.numel() != 8) throw ShapeError("head MLP must produce 8 outputs");
  OffsetPrediction pred;
  pred.mu = ad::slice(out, 0, 4);
  pred.log_sigma = ad::add_scalar(
      ad::scale(ad::sigmoid(ad::slice(out, 4, 4)), cfg.log_sigma_max - cfg.log_sigma_min),
      cfg.log_sigma_min);
  return pred;
}

ad::Tensor rle_loss(const OffsetPrediction& pred, const BoxOffset& label, LossVariant variant) {
  if (pred.mu.numel() != 4 || pred.log_sigma.numel() != 4) {
    throw ShapeError("rle_loss expects 4-vectors for mu and log_sigma");
  }
  const auto target = label.as_array();
  std::array<double, 4> resid{};
  for (int d = 0; d < 4; ++d) {
    const double r = target[d] - pred.mu.values()[d];
    resid[d] = d == 3 ? normalize_yaw(r) : r;
    if (!std::isfinite(resid[d])) throw NumericError("non-finite residual in rle_loss");
  }
  const bool rle = variant == LossVariant::kRle;
  double loss = 0.0;
  for (int d = 0; d < 4; ++d) {
    if (rle) {
      const double ls = pred.log_sigma.values()[d];
      loss += std::abs(resid[d]) * std::exp(-ls) + ls + std::log(2.0);
    } else {
      loss += std::abs(resid[d]);
    }
  }
  return ad::make_op({}, {loss}, {pred.mu, pred.log_sigma},
                     [resid, rle](const std::vector<ad::Node*>& ps) {
    return [resid, rle, pm = ps[0], pl = ps[1]](std::span<const double> g) {
      double* gm = ad::grad_buffer(pm);
      double* gl = rle ? ad::grad_buffer(pl) : nullptr;
      for (int d = 0; d < 4; ++d) {
        const double sign = resid[d] > 0.0 ? 1.0 : (resid[d] < 0.0 ? -1.0 : 0.0);
        const double inv_sigma = rle ? std::exp(-pl->value[d]) : 1.0;
        // d|r|/dmu = -sign(r).
        if (gm) gm[d] += -g[0] * sign * inv_sigma;
        if (gl) gl[d] += g[0] * (1.0 - std::abs(resid[d]) * inv_sigma);
      }
    };
  });
}

}  // namespace voxtrack
