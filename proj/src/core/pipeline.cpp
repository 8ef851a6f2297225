// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "core/error.hpp"

namespace voxtrack {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string describe(const TrainSample& s) {
  const auto& c = s.ref_box.center();
  return "label=(" + fmt_double(s.label.dx) + ", " + fmt_double(s.label.dy) + ", " +
         fmt_double(s.label.dz) + ", " + fmt_double(s.label.dtheta) + ") ref_center=(" +
         fmt_double(c.x) + ", " + fmt_double(c.y) + ", " + fmt_double(c.z) +
         ") ref_yaw=" + fmt_double(s.ref_box.yaw()) + " prev_points=" +
         std::to_string(s.prev_points) + " cur_points=" + std::to_string(s.cur_points) +
         " category=" + s.category;
}

}  // namespace

TrackerState init_tracker(const Box3D& first_box) {
  TrackerState s;
  s.current_box = first_box;
  return s;
}

TrackerState track_step(const TrackerState& state, const PointCloud& prev_cloud,
                        const PointCloud& cur_cloud, const Model& model) {
  const ModelConfig& cfg = model.config();
  const Box3D& ref = state.current_box;
  const PointCloud prev = canonicalize(crop_region(prev_cloud, ref, cfg.crop_margin), ref);
  const PointCloud cur = canonicalize(crop_region(cur_cloud, ref, cfg.crop_margin), ref);

  TrackerState next = state;
  ++next.frame_index;
  const bool lost = cur.empty() || voxelize(cur, cfg.voxel).size() == 0;
  if (lost) {
    next.history.push_back(ref);
    next.fallbacks.push_back(true);
    return next;
  }
  const OffsetPrediction pred = model.forward(prev, cur);
  next.current_box = apply_offset(ref, pred.offset());
  next.history.push_back(next.current_box);
  next.fallbacks.push_back(false);
  return next;
}

TrackResult track_sequence(const Box3D& first_box, int num_frames,
                           const std::function<PointCloud(int)>& frame, const Model& model) {
  if (num_frames < 2) throw InvalidArgument("tracking needs at least 2 frames");
  TrackerState state = init_tracker(first_box);
  PointCloud prev = frame(0);
  for (int f = 1; f < num_frames; ++f) {
    PointCloud cur = frame(f);
    state = track_step(state, prev, cur, model);
    prev = std::move(cur);
  }
  return {state.history, state.fallbacks};
}

TrackResult track_sequence(const TrackedSequence& seq, const Model& model) {
  seq.validate();
  return track_sequence(seq.gt_boxes.front(), static_cast<int>(seq.frames.size()),
                        [&seq](int f) { return seq.frames[static_cast<std::size_t>(f)]; }, model);
}

std::vector<TrainSample> make_train_samples(const TrackedSequence& seq, std::uint64_t rng_seed,
                                            double crop_margin, const JitterConfig& jitter,
                                            SampleStats* stats) {
  seq.validate();
  if (!(jitter.translation >= 0.0) || !(jitter.yaw >= 0.0)) {
    throw InvalidArgument("jitter bounds must be non-negative");
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> ut(-jitter.translation, jitter.translation);
  std::uniform_real_distribution<double> uy(-jitter.yaw, jitter.yaw);
  auto draw = [&rng](std::uniform_real_distribution<double>& d, double bound) {
    return bound == 0.0 ? 0.0 : d(rng);
  };

  std::vector<TrainSample> out;
  SampleStats st;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const Box3D& gt_prev = seq.gt_boxes[t - 1];
    const Vec3 d{draw(ut, jitter.translation), draw(ut, jitter.translation),
                 draw(ut, jitter.translation)};
    const double dyaw = draw(uy, jitter.yaw);
    const Box3D ref(gt_prev.center() + d, gt_prev.size(), gt_prev.yaw() + dyaw);

    TrainSample s;
    s.prev_cloud = canonicalize(crop_region(seq.frames[t - 1], ref, crop_margin), ref);
    s.cur_cloud = canonicalize(crop_region(seq.frames[t], ref, crop_margin), ref);
    s.prev_points = s.prev_cloud.size();
    s.cur_points = s.cur_cloud.size();
    if (s.prev_points == 0 && s.cur_points == 0) {
      ++st.skipped;
      continue;
    }
    s.label = offset_label(ref, seq.gt_boxes[t]);
    s.category = seq.category;
    s.ref_box = ref;
    s.cur_box = seq.gt_boxes[t];
    out.push_back(std::move(s));
    ++st.emitted;
  }
  if (stats) {
    stats->emitted += st.emitted;
    stats->skipped += st.skipped;
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(adam.lr >= 0.0) || !std::isfinite(adam.lr)) throw ConfigError("lr must be non-negative");
  if (!(lr_min >= 0.0) || !std::isfinite(lr_min)) throw ConfigError("lr_min must be non-negative");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (accumulate < 1) throw ConfigError("accumulate must be >= 1");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (!(jitter.translation >= 0.0) || !(jitter.yaw >= 0.0)) {
    throw ConfigError("jitter bounds must be non-negative");
  }
}

double sample_loss(const Model& model, const TrainSample& s, bool accumulate_grad) {
  const OffsetPrediction pred = model.forward(s.prev_cloud, s.cur_cloud);
  const ad::Tensor loss = rle_loss(pred, s.label, model.config().loss);
  const double v = loss.item();
  if (accumulate_grad && std::isfinite(v)) ad::backward(loss);
  return v;
}

namespace {

using SampleSource = std::function<const std::vector<TrainSample>&(int epoch)>;

TrainReport run_training(Model& model, const SampleSource& source, std::size_t skipped,
                         const TrainConfig& cfg) {
  cfg.validate();
  TrainReport report;
  report.skipped_pairs = skipped;
  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open training log " + cfg.log_path);
  }

  const std::size_t per_epoch = cfg.epochs > 0 ? source(0).size() : 0;
  const std::int64_t steps_per_epoch =
      static_cast<std::int64_t>((per_epoch + cfg.accumulate - 1) / cfg.accumulate);
  std::int64_t total = steps_per_epoch * cfg.epochs;
  if (cfg.max_steps > 0) total = std::min<std::int64_t>(total, cfg.max_steps);
  const double lr_hi = cfg.adam.lr;
  const double lr_lo = std::min(cfg.lr_min, lr_hi);

  ad::ParamStore& params = model.params();
  params.zero_grad();
  std::int64_t steps = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs && (total == 0 || steps < total); ++epoch) {
    const std::vector<TrainSample>& samples = source(epoch);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix(cfg.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    int pending = 0;
    for (std::size_t n = 0; n < order.size() && steps < total; ++n) {
      const TrainSample& s = samples[order[n]];
      const std::string where =
          "epoch " + std::to_string(epoch + 1) + ", sample " + std::to_string(order[n]) + ": ";
      double loss = 0.0;
      try {
        loss = sample_loss(model, s, true);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + where + describe(s));
      }
      if (!std::isfinite(loss)) throw NumericError("non-finite training loss at " + where + describe(s));
      loss_sum += loss;
      ++seen;
      ++pending;
      if (pending == cfg.accumulate || n + 1 == order.size()) {
        params.scale_grad(1.0 / pending);
        ad::AdamConfig step_cfg = cfg.adam;
        const double progress = total > 1 ? static_cast<double>(steps) / (total - 1) : 0.0;
        step_cfg.lr = lr_lo + 0.5 * (lr_hi - lr_lo) * (1.0 + std::cos(kPi * progress));
        ad::step_adam(params, step_cfg);
        params.zero_grad();
        pending = 0;
        ++steps;
      }
    }
    if (pending > 0) params.zero_grad();

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.mean_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.steps = steps;
    rec.samples = seen;
    report.epochs.push_back(rec);
    if (log) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "{\"epoch\":%d,\"mean_loss\":%.17g,\"wall_time\":%.3f,\"steps\":%lld}\n",
                    rec.epoch, rec.mean_loss, rec.wall_time, static_cast<long long>(steps));
      log << buf << std::flush;
    }
    if (!cfg.checkpoint_path.empty()) model.save(cfg.checkpoint_path);
  }
  return report;
}

}  // namespace

TrainReport train(Model& model, const std::vector<TrackedSequence>& dataset,
                  const TrainConfig& cfg) {
  const double margin = model.config().crop_margin;
  std::vector<TrainSample> cache;
  int cached_epoch = -1;
  std::size_t skipped = 0;
  const SampleSource source = [&](int epoch) -> const std::vector<TrainSample>& {
    const int key = cfg.resample_each_epoch ? epoch : 0;
    if (key != cached_epoch) {
      cache.clear();
      SampleStats stats;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        const std::uint64_t seed =
            mix(mix(cfg.seed, static_cast<std::uint64_t>(key)), static_cast<std::uint64_t>(i));
        auto part = make_train_samples(dataset[i], seed, margin, cfg.jitter, &stats);
        std::move(part.begin(), part.end(), std::back_inserter(cache));
      }
      if (cached_epoch < 0) skipped = stats.skipped;
      cached_epoch = key;
    }
    return cache;
  };
  if (cfg.epochs > 0) source(0);
  return run_training(model, source, skipped, cfg);
}

TrainReport train_on_samples(Model& model, const std::vector<TrainSample>& samples,
                             const TrainConfig& cfg) {
  return run_training(
      model, [&samples](int) -> const std::vector<TrainSample>& { return samples; }, 0, cfg);
}

}  // namespace voxtrack
