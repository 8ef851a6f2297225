// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "core/error.hpp"
#include "core/eval.hpp"

namespace voxtrack {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigError(where(key) + " must be non-negative");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, where(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + where(item.key()) + "'");
    }
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string downsampler_name(Downsampler d) { return d == Downsampler::kMax ? "max" : "avg"; }
std::string loss_name(LossVariant v) { return v == LossVariant::kRle ? "rle" : "l1"; }

void read_model(Section s, ModelConfig& m) {
  {
    Section v = s.sub("voxel");
    v.get("voxel_size", m.voxel.voxel_size);
    v.get("extent_min", m.voxel.extent_min);
    v.get("extent_max", m.voxel.extent_max);
    v.get("scale_ratio", m.voxel.scale_ratio);
    v.finish();
  }
  {
    Section b = s.sub("backbone");
    b.get("num_stages", m.backbone.num_stages);
    b.get("base_channels", m.backbone.base_channels);
    b.get("convs_per_stage", m.backbone.convs_per_stage);
    std::string ds = downsampler_name(m.backbone.fusion_downsampler);
    b.get("fusion_downsampler", ds);
    if (ds == "max") {
      m.backbone.fusion_downsampler = Downsampler::kMax;
    } else if (ds == "avg") {
      m.backbone.fusion_downsampler = Downsampler::kAvg;
    } else {
      throw ConfigError("model.backbone.fusion_downsampler must be 'max' or 'avg'");
    }
    b.get("fusion_stages", m.backbone.fusion_stages);
    b.finish();
  }
  {
    Section h = s.sub("head");
    h.get("hidden", m.head.hidden);
    h.get("log_sigma_min", m.head.log_sigma_min);
    h.get("log_sigma_max", m.head.log_sigma_max);
    h.finish();
  }
  s.get("crop_margin", m.crop_margin);
  std::string loss = loss_name(m.loss);
  s.get("loss", loss);
  if (loss == "rle") {
    m.loss = LossVariant::kRle;
  } else if (loss == "l1") {
    m.loss = LossVariant::kL1;
  } else {
    throw ConfigError("model.loss must be 'rle' or 'l1'");
  }
  s.finish();

  const double r = m.voxel.scale_ratio;
  if (!(r >= 2.0) || r != std::floor(r) || r > 16.0) {
    throw ConfigError("model.voxel.scale_ratio must be an integer in [2, 16]");
  }
  m.backbone.scale_ratio = static_cast<int>(r);
  m.validate();
}

void check_edges(const std::vector<double>& e, const char* what) {
  if (e.empty()) throw ConfigError(std::string(what) + " needs at least one edge");
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (!(e[i] > e[i - 1])) throw ConfigError(std::string(what) + " must increase strictly");
  }
}

}  // namespace

ordered_json model_config_to_json(const ModelConfig& m) {
  ordered_json j;
  j["voxel"] = {{"voxel_size", m.voxel.voxel_size},
                {"extent_min", m.voxel.extent_min},
                {"extent_max", m.voxel.extent_max},
                {"scale_ratio", m.voxel.scale_ratio}};
  j["backbone"] = {{"num_stages", m.backbone.num_stages},
                   {"base_channels", m.backbone.base_channels},
                   {"convs_per_stage", m.backbone.convs_per_stage},
                   {"fusion_downsampler", downsampler_name(m.backbone.fusion_downsampler)},
                   {"fusion_stages", m.backbone.fusion_stages}};
  j["head"] = {{"hidden", m.head.hidden},
               {"log_sigma_min", m.head.log_sigma_min},
               {"log_sigma_max", m.head.log_sigma_max}};
  j["crop_margin"] = m.crop_margin;
  j["loss"] = loss_name(m.loss);
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  read_model(Section(j, "model"), m);
  return m;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  synth.scene.validate();
  if (synth.sequences < 0) throw ConfigError("synth.sequences must be non-negative");
  if (synth.frames < 2) throw ConfigError("synth.frames must be >= 2");
  check_edges(eval.sparsity_edges, "eval.sparsity_edges");
  check_edges(eval.distractor_edges, "eval.distractor_edges");
  if (bench.warmup < 0) throw ConfigError("bench.warmup must be non-negative");
  if (bench.frames < 1) throw ConfigError("bench.frames must be positive");
}

ordered_json run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["model"] = model_config_to_json(c.model);
  const TrainConfig& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"lr", t.adam.lr},
                {"lr_min", t.lr_min},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"eps", t.adam.eps},
                {"accumulate", t.accumulate},
                {"max_steps", t.max_steps},
                {"seed", t.seed},
                {"init_seed", t.init_seed},
                {"jitter_translation", t.jitter.translation},
                {"jitter_yaw", t.jitter.yaw},
                {"resample_each_epoch", t.resample_each_epoch},
                {"checkpoint", t.checkpoint_path},
                {"log", t.log_path}};
  const SyntheticSceneConfig& s = c.synth.scene;
  j["synth"] = {{"sequences", c.synth.sequences},
                {"frames", c.synth.frames},
                {"seed", c.synth.seed},
                {"width_range", s.width_range},
                {"height_range", s.height_range},
                {"length_range", s.length_range},
                {"speed_range", s.speed_range},
                {"max_yaw_rate", s.max_yaw_rate},
                {"points_range", s.points_range},
                {"clutter_density", s.clutter_density},
                {"clutter_radius", s.clutter_radius},
                {"dropout", s.dropout},
                {"distractors", s.distractors},
                {"jitter_sigma", s.jitter_sigma}};
  j["eval"] = {{"sparsity_edges", c.eval.sparsity_edges},
               {"distractor_edges", c.eval.distractor_edges}};
  j["bench"] = {{"warmup", c.bench.warmup}, {"frames", c.bench.frames}, {"seed", c.bench.seed}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.eval.sparsity_edges = default_bucket_edges(BucketAxis::kSparsity);
  c.eval.distractor_edges = default_bucket_edges(BucketAxis::kDistractors);
  Section root(j, "");
  read_model(root.sub("model"), c.model);
  {
    Section t = root.sub("train");
    t.get("epochs", c.train.epochs);
    t.get("lr", c.train.adam.lr);
    t.get("lr_min", c.train.lr_min);
    t.get("beta1", c.train.adam.beta1);
    t.get("beta2", c.train.adam.beta2);
    t.get("eps", c.train.adam.eps);
    t.get("accumulate", c.train.accumulate);
    t.get("max_steps", c.train.max_steps);
    t.get("seed", c.train.seed);
    t.get("init_seed", c.train.init_seed);
    t.get("jitter_translation", c.train.jitter.translation);
    t.get("jitter_yaw", c.train.jitter.yaw);
    t.get("resample_each_epoch", c.train.resample_each_epoch);
    t.get("checkpoint", c.train.checkpoint_path);
    t.get("log", c.train.log_path);
    t.finish();
  }
  {
    Section s = root.sub("synth");
    SyntheticSceneConfig& sc = c.synth.scene;
    s.get("sequences", c.synth.sequences);
    s.get("frames", c.synth.frames);
    s.get("seed", c.synth.seed);
    s.get("width_range", sc.width_range);
    s.get("height_range", sc.height_range);
    s.get("length_range", sc.length_range);
    s.get("speed_range", sc.speed_range);
    s.get("max_yaw_rate", sc.max_yaw_rate);
    s.get("points_range", sc.points_range);
    s.get("clutter_density", sc.clutter_density);
    s.get("clutter_radius", sc.clutter_radius);
    s.get("dropout", sc.dropout);
    s.get("distractors", sc.distractors);
    s.get("jitter_sigma", sc.jitter_sigma);
    s.finish();
  }
  {
    Section e = root.sub("eval");
    e.get("sparsity_edges", c.eval.sparsity_edges);
    e.get("distractor_edges", c.eval.distractor_edges);
    e.finish();
  }
  {
    Section b = root.sub("bench");
    b.get("warmup", c.bench.warmup);
    b.get("frames", c.bench.frames);
    b.get("seed", c.bench.seed);
    b.finish();
  }
  root.finish();
  c.validate();
  return c;
}

void apply_override(json& doc, const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("override key is empty");
  json* node = &doc;
  std::stringstream ks(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ks, part, '.')) {
    if (part.empty()) throw ConfigError("malformed override key '" + key + "'");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    json& child = (*node)[parts[i]];
    if (child.is_null()) child = json::object();
    node = &child;
  }
  if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
  json parsed = json::parse(value, nullptr, false);
  (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  apply_override(doc, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return run_config_from_json(doc);
}

}  // namespace voxtrack
