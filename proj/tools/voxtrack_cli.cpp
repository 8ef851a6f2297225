// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the tracker only through the C API.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "voxtrack/voxtrack.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

int report_error(const std::string& kind, const std::string& message, int code) {
  std::fprintf(stderr, "{\"error\":\"%s\",\"message\":\"%s\"}\n", json_escape(kind).c_str(),
               json_escape(message).c_str());
  return code;
}

struct Failure {
  vxt_status status;
  std::string message;
};

void check(vxt_status s) {
  if (s != VXT_OK) throw Failure{s, vxt_last_error()};
}

// Owns one C handle.
template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr_); }
  T** out() { return &ptr_; }
  T* get() const { return ptr_; }

 private:
  T* ptr_ = nullptr;
};

using Config = Handle<vxt_config, vxt_config_free>;
using Model = Handle<vxt_model, vxt_model_free>;
using Dataset = Handle<vxt_dataset, vxt_dataset_free>;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

struct DataArgs {
  std::string dir;
  std::string format = "native";
  std::string sequences;
  std::string category = "Car";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override as dotted.key=value (repeatable)");
}

void add_data(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.dir, "Dataset directory (kitti: the tracking root)")->required();
  cmd->add_option("--format", d.format, "Dataset layout")
      ->check(CLI::IsMember({"native", "kitti"}));
  cmd->add_option("--sequences", d.sequences, "KITTI sequence ids, comma separated");
  cmd->add_option("--category", d.category, "KITTI object type");
}

void load_config(const Common& c, Config& cfg) {
  check(vxt_config_load(c.config.empty() ? nullptr : c.config.c_str(), cfg.out()));
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Failure{VXT_ERR_USAGE, "--set expects key=value, got '" + o + "'"};
    }
    check(vxt_config_set(cfg.get(), o.substr(0, eq).c_str(), o.substr(eq + 1).c_str()));
  }
}

void open_data(const DataArgs& d, Dataset& ds) {
  if (d.format == "kitti") {
    if (d.sequences.empty()) throw Failure{VXT_ERR_USAGE, "--format kitti requires --sequences"};
    check(vxt_dataset_open_kitti(d.dir.c_str(), d.sequences.c_str(), d.category.c_str(), ds.out()));
  } else {
    check(vxt_dataset_open(d.dir.c_str(), ds.out()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VoxTrack: voxel-based point-cloud single-object tracker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vxt_version());

  Common common;
  DataArgs data;

  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, common);
  synth->add_option("--out", synth_out, "Output directory")->required();

  std::string train_out, train_log, train_init;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train, common);
  add_data(train, data);
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--log", train_log, "Line-delimited per-epoch log");
  train->add_option("--init", train_init, "Start from this checkpoint")->check(CLI::ExistingFile);

  std::string track_model, track_out;
  auto* track = app.add_subcommand("track", "Track every sequence of a dataset");
  add_common(track, common);
  add_data(track, data);
  track->add_option("--model", track_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  track->add_option("--out", track_out, "Prediction directory")->required();

  std::string eval_pred, eval_out;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  add_common(eval, common);
  add_data(eval, data);
  eval->add_option("--pred", eval_pred, "Prediction directory")->required();
  eval->add_option("--out", eval_out, "Report path (line-delimited JSON)");

  std::string bench_model, bench_out;
  auto* bench = app.add_subcommand("bench", "Measure tracking throughput");
  add_common(bench, common);
  bench->add_option("--model", bench_model, "Checkpoint (default: fresh model from config)")
      ->check(CLI::ExistingFile);
  bench->add_option("--out", bench_out, "Report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kExitUsage);
  }

  try {
    Config cfg;
    load_config(common, cfg);

    if (*synth) {
      check(vxt_synth(cfg.get(), synth_out.c_str()));
      std::printf("{\"type\":\"synth\",\"out\":\"%s\"}\n", json_escape(synth_out).c_str());
    } else if (*train) {
      Dataset ds;
      open_data(data, ds);
      Model model;
      if (train_init.empty()) {
        check(vxt_model_create(cfg.get(), model.out()));
      } else {
        check(vxt_model_load(train_init.c_str(), model.out()));
      }
      check(vxt_config_set(cfg.get(), "train.checkpoint", ("\"" + json_escape(train_out) + "\"").c_str()));
      if (!train_log.empty()) {
        check(vxt_config_set(cfg.get(), "train.log", ("\"" + json_escape(train_log) + "\"").c_str()));
      }
      vxt_train_summary s{};
      check(vxt_train(cfg.get(), ds.get(), model.get(), &s));
      check(vxt_model_save(model.get(), train_out.c_str()));
      std::printf(
          "{\"type\":\"train\",\"sequences\":%zu,\"epochs\":%d,\"steps\":%lld,"
          "\"final_loss\":%.6f,\"skipped_pairs\":%llu}\n",
          vxt_dataset_size(ds.get()), s.epochs, static_cast<long long>(s.steps), s.final_loss,
          static_cast<unsigned long long>(s.skipped_pairs));
    } else if (*track) {
      Dataset ds;
      open_data(data, ds);
      Model model;
      check(vxt_model_load(track_model.c_str(), model.out()));
      int32_t fallbacks = 0;
      check(vxt_track(model.get(), ds.get(), track_out.c_str(), &fallbacks));
      std::printf("{\"type\":\"track\",\"sequences\":%zu,\"fallbacks\":%d}\n",
                  vxt_dataset_size(ds.get()), fallbacks);
    } else if (*eval) {
      Dataset ds;
      open_data(data, ds);
      vxt_eval_summary s{};
      check(vxt_eval(cfg.get(), ds.get(), eval_pred.c_str(),
                     eval_out.empty() ? nullptr : eval_out.c_str(), &s));
      std::printf(
          "{\"type\":\"eval\",\"sequences\":%d,\"frames\":%d,\"success\":%.6f,"
          "\"precision\":%.6f,\"mean_iou\":%.6f,\"mean_error\":%.6f,\"fallbacks\":%d}\n",
          s.sequences, s.frames, s.success, s.precision, s.mean_iou, s.mean_error, s.fallbacks);
    } else if (*bench) {
      Model model;
      if (bench_model.empty()) {
        check(vxt_model_create(cfg.get(), model.out()));
      } else {
        check(vxt_model_load(bench_model.c_str(), model.out()));
      }
      vxt_bench_summary s{};
      check(vxt_bench(cfg.get(), model.get(), bench_out.empty() ? nullptr : bench_out.c_str(), &s));
      std::printf(
          "{\"type\":\"bench\",\"frames_per_rep\":%d,\"reps\":%d,\"median_fps\":%.3f,"
          "\"min_fps\":%.3f,\"max_fps\":%.3f}\n",
          s.frames_per_rep, s.reps, s.median_fps, s.min_fps, s.max_fps);
    }
  } catch (const Failure& f) {
    const bool usage = f.status == VXT_ERR_USAGE || f.status == VXT_ERR_CONFIG;
    return report_error(vxt_status_name(f.status), f.message, usage ? kExitUsage : kExitFailure);
  }
  return 0;
}
