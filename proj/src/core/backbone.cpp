// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/backbone.hpp"

#include "core/error.hpp"

namespace voxtrack {

namespace {

const char* kStreams[2] = {"large", "small"};

std::string conv_name(const std::string& stream, int stage, const std::string& layer) {
  return "backbone." + stream + ".stage" + std::to_string(stage) + "." + layer;
}

void add_conv(ad::ParamStore& store, const std::string& name, int kernel, std::size_t cin,
              std::size_t cout, std::mt19937_64& rng) {
  const std::size_t kv = static_cast<std::size_t>(kernel) * kernel * kernel;
  store.add(name + ".weight", {kv, cin, cout}, ad::fan_in_uniform(kv * cin * cout, kv * cin, rng));
  store.add(name + ".bias", {cout}, std::vector<double>(cout, 0.0));
}

SparseTensor3D conv_relu(const SparseTensor3D& x, const ad::ParamStore& params,
                         const std::string& name, int kernel, int stride, ConvMode mode,
                         std::size_t cout) {
  const ConvSpec spec{x.channels(), cout, kernel, stride, mode};
  return sparse_relu(
      sparse_conv(x, spec, params.get(name + ".weight"), params.get(name + ".bias")));
}

SparseTensor3D& stream(StageFeatures& f, int s) { return s == 0 ? f.large : f.small; }
const SparseTensor3D& stream(const StageFeatures& f, int s) { return s == 0 ? f.large : f.small; }

}  // namespace

void BackboneConfig::validate() const {
  if (num_stages < 1) throw ConfigError("backbone needs at least one stage");
  if (base_channels < 1) throw ConfigError("base_channels must be positive");
  if (scale_ratio < 2) throw ConfigError("backbone scale ratio must be an integer >= 2");
  if (in_channels < 1) throw ConfigError("in_channels must be positive");
  if (convs_per_stage < 0) throw ConfigError("convs_per_stage must be non-negative");
  if (!fusion_stages.empty() && fusion_stages.size() != static_cast<std::size_t>(num_stages)) {
    throw ConfigError("fusion_stages needs one flag per stage");
  }
}

bool BackboneConfig::fusion_enabled(int stage) const {
  return fusion_stages.empty() || fusion_stages.at(static_cast<std::size_t>(stage - 1));
}

std::size_t BackboneConfig::stage_in_channels(int stage) const {
  return static_cast<std::size_t>(base_channels) << (stage - 1);
}

std::size_t BackboneConfig::output_channels() const {
  return static_cast<std::size_t>(base_channels) << num_stages;
}

void register_backbone(ad::ParamStore& store, const BackboneConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  for (const char* s : kStreams) {
    add_conv(store, std::string("backbone.") + s + ".stem", 3, cfg.in_channels,
             cfg.base_channels, rng);
    for (int st = 1; st <= cfg.num_stages; ++st) {
      const std::size_t c = cfg.stage_in_channels(st);
      for (int i = 0; i < cfg.convs_per_stage; ++i) {
        add_conv(store, conv_name(s, st, "conv" + std::to_string(i)), 3, c, c, rng);
      }
      add_conv(store, conv_name(s, st, "down"), 3, c, 2 * c, rng);
    }
  }
  for (int st = 1; st <= cfg.num_stages; ++st) {
    if (!cfg.fusion_enabled(st)) continue;
    const std::size_t c = 2 * cfg.stage_in_channels(st);
    const std::string base = "backbone.cif" + std::to_string(st);
    add_conv(store, base + ".to_large", 1, 2 * c, c, rng);
    if (st < cfg.num_stages) add_conv(store, base + ".to_small", 1, 2 * c, c, rng);
  }
}

StageFeatures stem_forward(const StageFeatures& input, const ad::ParamStore& params,
                           const BackboneConfig& cfg) {
  StageFeatures out = input;
  for (int s = 0; s < 2; ++s) {
    const auto& x = stream(input, s);
    if (x.channels() != static_cast<std::size_t>(cfg.in_channels)) {
      throw ShapeError("backbone input must carry " + std::to_string(cfg.in_channels) + " channels");
    }
    stream(out, s) = conv_relu(x, params, std::string("backbone.") + kStreams[s] + ".stem", 3, 1,
                               ConvMode::kSubmanifold, cfg.base_channels);
  }
  return out;
}

StageFeatures stage_forward(const StageFeatures& feats, int stage, const ad::ParamStore& params,
                            const BackboneConfig& cfg, BackboneTrace* trace) {
  const std::size_t c = cfg.stage_in_channels(stage);
  StageFeatures out = feats;
  for (int s = 0; s < 2; ++s) {
    const SparseTensor3D& in = stream(feats, s);
    if (in.channels() != c) {
      throw ShapeError("stage " + std::to_string(stage) + " " + kStreams[s] + " stream has " +
                       std::to_string(in.channels()) + " channels, expected " + std::to_string(c));
    }
    SparseTensor3D x = in;
    for (int i = 0; i < cfg.convs_per_stage; ++i) {
      x = conv_relu(x, params, conv_name(kStreams[s], stage, "conv" + std::to_string(i)), 3, 1,
                    ConvMode::kSubmanifold, c);
    }
    x = conv_relu(x, params, conv_name(kStreams[s], stage, "down"), 3, 2, ConvMode::kStrided, 2 * c);

    // Each stage halves the grid and doubles the width.
    if (x.dims() != ceil_div(in.dims(), 2) || x.channels() != 2 * in.channels()) {
      throw ShapeError("stage " + std::to_string(stage) + " broke the halve-dims/double-channels contract");
    }
    if (trace) {
      trace->stages.push_back({stage, kStreams[s], in.dims(), in.channels(), x.dims(), x.channels()});
    }
    stream(out, s) = std::move(x);
  }
  if (trace) trace->pre_fusion.push_back(out);
  return out;
}

StageFeatures cif_fuse(const StageFeatures& feats, int stage, const ad::ParamStore& params,
                       FusionDirection direction, const BackboneConfig& cfg) {
  const int r = cfg.scale_ratio;
  if (ceil_div(feats.small.dims(), r) != feats.large.dims()) {
    throw ShapeError("cif_fuse: small stream dims are not ratio x large stream dims");
  }
  if (feats.small.channels() != feats.large.channels()) {
    throw ShapeError("cif_fuse: streams differ in channel width");
  }
  const std::size_t c = feats.large.channels();
  const std::string base = "backbone.cif" + std::to_string(stage);

  const SparseTensor3D pooled = cfg.fusion_downsampler == Downsampler::kMax
                                    ? max_pool(feats.small, r)
                                    : avg_pool(feats.small, r);
  StageFeatures out = feats;
  out.large = conv_relu(concat_channels(feats.large, pooled), params, base + ".to_large", 1, 1,
                        ConvMode::kSubmanifold, c);
  if (direction == FusionDirection::kBidirectional) {
    const SparseTensor3D lifted =
        upsample_lerp(feats.large, r, feats.small.dims(), feats.small.coords());
    out.small = conv_relu(concat_channels(feats.small, lifted), params, base + ".to_small", 1, 1,
                          ConvMode::kSubmanifold, c);
  }
  return out;
}

SparseTensor3D backbone_forward(const VoxelGrid& large, const VoxelGrid& small,
                                const ad::ParamStore& params, const BackboneConfig& cfg,
                                BackboneTrace* trace) {
  cfg.validate();
  StageFeatures feats{SparseTensor3D::from_grid(large), SparseTensor3D::from_grid(small)};
  feats = stem_forward(feats, params, cfg);
  for (int st = 1; st <= cfg.num_stages; ++st) {
    feats = stage_forward(feats, st, params, cfg, trace);
    if (!cfg.fusion_enabled(st)) continue;
    const auto dir = st == cfg.num_stages ? FusionDirection::kSmallToLarge
                                          : FusionDirection::kBidirectional;
    feats = cif_fuse(feats, st, params, dir, cfg);
  }
  return feats.large;
}

}  // namespace voxtrack
