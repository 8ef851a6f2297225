// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "voxtrack/voxtrack.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "core/bench.hpp"
#include "core/config.hpp"
#include "core/data_io.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/model.hpp"
#include "core/pipeline.hpp"

struct vxt_config {
  nlohmann::json doc;
  voxtrack::RunConfig cfg;
};

struct vxt_model {
  voxtrack::Model model;
};

struct vxt_dataset {
  std::vector<voxtrack::SequenceRecord> records;
};

namespace {

using namespace voxtrack;

thread_local std::string g_last_error;

vxt_status to_status(ErrorCode c) { return static_cast<vxt_status>(static_cast<int>(c)); }

template <typename F>
vxt_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return VXT_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return VXT_ERR_CONFIG;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return VXT_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return VXT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VXT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return VXT_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

Box3D to_box(const vxt_box& b) { return Box3D({b.x, b.y, b.z}, {b.w, b.h, b.l}, b.yaw); }

vxt_box from_box(const Box3D& b) {
  return {b.center().x, b.center().y, b.center().z, b.size().w, b.size().h, b.size().l, b.yaw()};
}

PointCloud to_cloud(const double* xyz, std::size_t n) {
  require(n == 0 || xyz != nullptr, "point buffer is NULL");
  std::vector<Vec3> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
  return PointCloud(std::move(pts));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

std::vector<TrackedSequence> sequences_of(const vxt_dataset* ds) {
  std::vector<TrackedSequence> out;
  out.reserve(ds->records.size());
  for (const auto& r : ds->records) out.push_back(r.seq);
  return out;
}

struct Prediction {
  std::vector<Box3D> boxes;
  std::vector<bool> fallbacks;
};

Prediction read_prediction(const std::string& path, std::size_t num_frames) {
  std::ifstream in(path);
  if (!in) throw IoError("missing prediction file " + path);
  Prediction p;
  std::string line;
  std::size_t expect = 1;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Box3D box;
    std::vector<std::string> extra;
    const int f = parse_box_line(line, &box, &extra);
    if (f < 0 || static_cast<std::size_t>(f) != expect) {
      throw FormatError(path + ": expected frame " + std::to_string(expect));
    }
    ++expect;
    p.boxes.push_back(box);
    p.fallbacks.push_back(!extra.empty() && extra[0] == "1");
  }
  if (p.boxes.size() + 1 != num_frames) {
    throw FormatError(path + ": covers " + std::to_string(p.boxes.size()) + " frames, expected " +
                      std::to_string(num_frames - 1));
  }
  return p;
}

}  // namespace

extern "C" {

const char* vxt_version(void) { return "0.1.0"; }

const char* vxt_status_name(vxt_status s) {
  switch (s) {
    case VXT_OK: return "ok";
    case VXT_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case VXT_ERR_CONFIG: return "config";
    case VXT_ERR_SHAPE: return "shape";
    case VXT_ERR_IO: return "io";
    case VXT_ERR_FORMAT: return "format";
    case VXT_ERR_NUMERIC: return "numeric";
    case VXT_ERR_USAGE: return "usage";
    case VXT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* vxt_last_error(void) { return g_last_error.c_str(); }

vxt_status vxt_config_load(const char* path, vxt_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = nullptr;
    auto c = std::make_unique<vxt_config>();
    c->doc = nlohmann::json::object();
    if (path) {
      std::ifstream in(path);
      if (!in) throw IoError(std::string("cannot open config file ") + path);
      try {
        c->doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(path) + ": " + e.what());
      }
    }
    c->cfg = run_config_from_json(c->doc);
    *out = c.release();
  });
}

vxt_status vxt_config_set(vxt_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "config, key and value must be non-NULL");
    nlohmann::json doc = cfg->doc;
    apply_override(doc, key, value);
    RunConfig parsed = run_config_from_json(doc);
    cfg->doc = std::move(doc);
    cfg->cfg = std::move(parsed);
  });
}

vxt_status vxt_config_dump(const vxt_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(cfg != nullptr, "config is NULL");
    const std::string s = run_config_to_json(cfg->cfg).dump(2);
    if (needed) *needed = s.size() + 1;
    if (cap == 0) return;
    require(buf != nullptr, "buffer is NULL");
    if (cap < s.size() + 1) throw InvalidArgument("buffer too small for configuration dump");
    std::memcpy(buf, s.c_str(), s.size() + 1);
  });
}

void vxt_config_free(vxt_config* cfg) { delete cfg; }

vxt_status vxt_dataset_open(const char* dir, vxt_dataset** out) {
  return guarded([&] {
    require(dir && out, "dir and out must be non-NULL");
    *out = nullptr;
    auto ds = std::make_unique<vxt_dataset>();
    ds->records = read_dataset(dir);
    *out = ds.release();
  });
}

vxt_status vxt_dataset_open_kitti(const char* root, const char* sequences, const char* category,
                                  vxt_dataset** out) {
  return guarded([&] {
    require(root && sequences && category && out, "arguments must be non-NULL");
    *out = nullptr;
    auto ds = std::make_unique<vxt_dataset>();
    std::stringstream ss(sequences);
    std::string seq;
    while (std::getline(ss, seq, ',')) {
      if (seq.empty()) continue;
      auto part = kitti_to_tracklets(root, seq, category);
      std::move(part.begin(), part.end(), std::back_inserter(ds->records));
    }
    *out = ds.release();
  });
}

size_t vxt_dataset_size(const vxt_dataset* ds) { return ds ? ds->records.size() : 0; }

const char* vxt_dataset_name(const vxt_dataset* ds, size_t index) {
  if (!ds || index >= ds->records.size()) return nullptr;
  return ds->records[index].name.c_str();
}

vxt_status vxt_dataset_save(const vxt_dataset* ds, const char* dir) {
  return guarded([&] {
    require(ds && dir, "dataset and dir must be non-NULL");
    for (const auto& r : ds->records) write_sequence_dir(dir, r);
  });
}

void vxt_dataset_free(vxt_dataset* ds) { delete ds; }

vxt_status vxt_synth(const vxt_config* cfg, const char* out_dir) {
  return guarded([&] {
    require(cfg && out_dir, "config and out_dir must be non-NULL");
    const auto& s = cfg->cfg.synth;
    for (const auto& r : generate_dataset(s.scene, s.sequences, s.frames, s.seed)) {
      write_sequence_dir(out_dir, r);
    }
  });
}

vxt_status vxt_model_create(const vxt_config* cfg, vxt_model** out) {
  return guarded([&] {
    require(cfg && out, "config and out must be non-NULL");
    *out = nullptr;
    *out = new vxt_model{Model::create(cfg->cfg.model, cfg->cfg.train.init_seed)};
  });
}

vxt_status vxt_model_load(const char* path, vxt_model** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-NULL");
    *out = nullptr;
    *out = new vxt_model{Model::load(path)};
  });
}

vxt_status vxt_model_save(const vxt_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path must be non-NULL");
    model->model.save(path);
  });
}

vxt_status vxt_model_zero_output(vxt_model* model) {
  return guarded([&] {
    require(model != nullptr, "model is NULL");
    model->model.zero_output();
  });
}

void vxt_model_free(vxt_model* model) { delete model; }

vxt_status vxt_train(const vxt_config* cfg, const vxt_dataset* ds, vxt_model* model,
                     vxt_train_summary* summary) {
  return guarded([&] {
    require(cfg && ds && model, "config, dataset and model must be non-NULL");
    if (ds->records.empty()) throw InvalidArgument("training dataset is empty");
    const TrainReport rep = train(model->model, sequences_of(ds), cfg->cfg.train);
    if (summary) {
      summary->epochs = static_cast<int32_t>(rep.epochs.size());
      summary->steps = rep.epochs.empty() ? 0 : rep.epochs.back().steps;
      summary->final_loss = rep.epochs.empty() ? 0.0 : rep.epochs.back().mean_loss;
      summary->skipped_pairs = rep.skipped_pairs;
    }
  });
}

vxt_status vxt_track(const vxt_model* model, const vxt_dataset* ds, const char* pred_dir,
                     int32_t* fallbacks) {
  return guarded([&] {
    require(model && ds && pred_dir, "model, dataset and pred_dir must be non-NULL");
    std::filesystem::create_directories(pred_dir);
    int32_t total = 0;
    for (const auto& r : ds->records) {
      const TrackResult res = track_sequence(r.seq, model->model);
      std::string text;
      for (std::size_t i = 0; i < res.boxes.size(); ++i) {
        text += format_box_line(static_cast<int>(i + 1), res.boxes[i]) +
                (res.fallbacks[i] ? " 1\n" : " 0\n");
        total += res.fallbacks[i] ? 1 : 0;
      }
      write_text((std::filesystem::path(pred_dir) / (r.name + ".txt")).string(), text);
    }
    if (fallbacks) *fallbacks = total;
  });
}

vxt_status vxt_eval(const vxt_config* cfg, const vxt_dataset* ds, const char* pred_dir,
                    const char* report_path, vxt_eval_summary* summary) {
  return guarded([&] {
    require(cfg && ds && pred_dir, "config, dataset and pred_dir must be non-NULL");
    if (ds->records.empty()) throw InvalidArgument("evaluation dataset is empty");
    std::vector<OpeResult> results;
    std::string report;
    for (const auto& r : ds->records) {
      const Prediction p = read_prediction(
          (std::filesystem::path(pred_dir) / (r.name + ".txt")).string(), r.seq.frames.size());
      const std::vector<Box3D> gt(r.seq.gt_boxes.begin() + 1, r.seq.gt_boxes.end());
      results.push_back(evaluate_sequence(r.name, p.boxes, gt, p.fallbacks, r.meta));
      report += format_sequence_record(results.back());
    }
    const Aggregate a = aggregate(results);
    report += format_aggregate_record(a);
    report += format_bucket_records(
        bucket_report(results, BucketAxis::kSparsity, cfg->cfg.eval.sparsity_edges));
    report += format_bucket_records(
        bucket_report(results, BucketAxis::kDistractors, cfg->cfg.eval.distractor_edges));
    if (report_path) write_text(report_path, report);
    if (summary) {
      *summary = {a.sequences, a.frames,     a.success, a.precision,
                  a.mean_iou,  a.mean_error, a.fallbacks};
    }
  });
}

vxt_status vxt_bench(const vxt_config* cfg, const vxt_model* model, const char* report_path,
                     vxt_bench_summary* summary) {
  return guarded([&] {
    require(cfg && model, "config and model must be non-NULL");
    SyntheticSceneConfig scene = cfg->cfg.synth.scene;
    scene.seed = cfg->cfg.bench.seed;
    const BenchResult r =
        run_bench(model->model, scene, cfg->cfg.bench.frames, cfg->cfg.bench.warmup);
    if (report_path) write_text(report_path, format_bench_record(r));
    if (summary) {
      *summary = {r.frames_per_rep, static_cast<int32_t>(r.rep_fps.size()), r.median_fps,
                  r.min_fps, r.max_fps};
    }
  });
}

vxt_status vxt_track_step(const vxt_model* model, const vxt_box* box, const double* prev_xyz,
                          size_t prev_count, const double* cur_xyz, size_t cur_count, vxt_box* out,
                          int32_t* fallback) {
  return guarded([&] {
    require(model && box && out, "model, box and out must be non-NULL");
    const TrackerState next = track_step(init_tracker(to_box(*box)), to_cloud(prev_xyz, prev_count),
                                         to_cloud(cur_xyz, cur_count), model->model);
    *out = from_box(next.current_box);
    if (fallback) *fallback = next.fallbacks.back() ? 1 : 0;
  });
}

vxt_status vxt_iou3d(const vxt_box* a, const vxt_box* b, double* out) {
  return guarded([&] {
    require(a && b && out, "arguments must be non-NULL");
    *out = iou3d(to_box(*a), to_box(*b));
  });
}

}  // extern "C"
