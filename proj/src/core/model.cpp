// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/model.hpp"

#include <cmath>
#include <random>

#include "core/config.hpp"
#include "core/error.hpp"

namespace voxtrack {

void ModelConfig::validate() const {
  voxel.validate();
  backbone.validate();
  head.validate();
  if (!(crop_margin >= 0.0) || !std::isfinite(crop_margin)) {
    throw ConfigError("crop margin must be a non-negative number");
  }
  if (voxel.scale_ratio != static_cast<double>(backbone.scale_ratio)) {
    throw ConfigError("voxel scale ratio must equal the backbone's integer ratio");
  }
}

GridDims ModelConfig::output_dims() const {
  GridDims d = voxel.large().dims();
  for (int s = 0; s < backbone.num_stages; ++s) d = ceil_div(d, 2);
  return d;
}

std::size_t ModelConfig::bev_channels() const {
  return backbone.output_channels() * static_cast<std::size_t>(output_dims()[2]);
}

Model Model::create(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ad::ParamStore store;
  register_backbone(store, cfg.backbone, rng);
  register_head(store, cfg.bev_channels(), cfg.head, rng);
  return Model(cfg, std::move(store));
}

Model Model::from_bytes(const std::string& bytes) {
  std::string meta;
  ad::ParamStore store = ad::deserialize_checkpoint(bytes, &meta);
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(nlohmann::json::parse(meta));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  // The stored tensors must match what this architecture registers.
  const Model ref = create(cfg, 0);
  if (ref.params_.names() != store.names()) {
    throw FormatError("checkpoint parameters do not match the stored architecture");
  }
  for (const auto& [name, e] : ref.params_.entries()) {
    if (store.get(name).shape() != e.value.shape()) {
      throw FormatError("checkpoint tensor " + name + " has shape " +
                        ad::shape_str(store.get(name).shape()) + ", expected " +
                        ad::shape_str(e.value.shape()));
    }
  }
  return Model(cfg, std::move(store));
}

Model Model::load(const std::string& path) {
  std::string meta;
  ad::ParamStore store = ad::load_checkpoint(path, &meta);
  return from_bytes(ad::serialize_checkpoint(store, meta));
}

std::string Model::to_bytes() const {
  return ad::serialize_checkpoint(params_, model_config_to_json(cfg_).dump());
}

void Model::save(const std::string& path) const {
  ad::save_checkpoint(path, params_, model_config_to_json(cfg_).dump());
}

void Model::zero_output() {
  const std::string last = "head.mlp.fc" + std::to_string(cfg_.head.hidden.size());
  for (const char* part : {".weight", ".bias"}) {
    auto v = params_.entries().at(last + part).value.mutable_values();
    std::fill(v.begin(), v.end(), 0.0);
  }
}

OffsetPrediction Model::forward(const DualVoxelGrids& grids, BackboneTrace* trace) const {
  const SparseTensor3D feats =
      backbone_forward(grids.large, grids.small, params_, cfg_.backbone, trace);
  return head_forward(to_bev(feats), params_, cfg_.head);
}

OffsetPrediction Model::forward(const PointCloud& prev, const PointCloud& cur) const {
  return forward(dual_voxelize(prev, cur, cfg_.voxel));
}

}  // namespace voxtrack
