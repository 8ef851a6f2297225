// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <random>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace voxtrack;

namespace {

OpeResult fake_result(std::mt19937_64& rng, const std::string& name, int frames, std::optional<int> pts,
                      std::optional<int> dis) {
  std::uniform_real_distribution<double> iou(0.0, 1.0), err(0.0, 3.0);
  OpeResult r;
  r.name = name;
  for (int i = 0; i < frames; ++i) {
    r.ious.push_back(i % 5 == 0 ? 0.0 : iou(rng));
    r.errors.push_back(err(rng));
  }
  r.success = success_metric(r.ious);
  r.precision = precision_metric(r.errors);
  r.meta = {pts, dis};
  return r;
}

}  // namespace

TEST_CASE("success and precision against threshold sweeps") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0), e(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> ious(1 + t % 37), errs(1 + t % 41);
    for (auto& v : ious) v = t % 3 == 0 ? std::round(u(rng) * 20) / 20 : u(rng);
    for (auto& v : errs) v = t % 3 == 0 ? std::round(e(rng) * 10) / 10 : e(rng);
    CHECK(success_metric(ious) == doctest::Approx(oracle::success_sweep(ious)).epsilon(1e-12));
    CHECK(precision_metric(errs) == doctest::Approx(oracle::precision_sweep(errs)).epsilon(1e-12));
  }
  const Box3D b({1, 2, 0}, {1.7, 1.5, 4.1}, 0.3);
  CHECK(iou3d(b, b) == 1.0);
  CHECK(success_metric(std::vector<double>(10, 1.0)) == 100.0);
  CHECK(success_metric(std::vector<double>(10, 0.0)) == 0.0);
  CHECK(precision_metric(std::vector<double>(10, 0.0)) == 100.0);
  CHECK(precision_metric(std::vector<double>(10, 5.0)) == 0.0);
  // A single frame at IoU 0.5 passes 11 of 21 thresholds.
  CHECK(success_metric(std::vector<double>{0.5}) == doctest::Approx(100.0 * (10.0 + 0.5) / 20.0));

  CHECK_THROWS_AS(success_metric(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(precision_metric(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(success_metric(std::vector<double>{1.5}), InvalidArgument);
  CHECK_THROWS_AS(precision_metric(std::vector<double>{-0.1}), InvalidArgument);
}

TEST_CASE("metrics are monotone in per-frame quality") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> ious(20), errs(20);
    for (auto& v : ious) v = u(rng);
    for (auto& v : errs) v = 2.5 * u(rng);
    auto better_i = ious, better_e = errs;
    const std::size_t k = static_cast<std::size_t>(t % 20);
    better_i[k] = std::min(1.0, better_i[k] + 0.3);
    better_e[k] = std::max(0.0, better_e[k] - 0.5);
    CHECK(success_metric(better_i) >= success_metric(ious));
    CHECK(precision_metric(better_e) >= precision_metric(errs));
  }
}

TEST_CASE("sequence evaluation and aggregation") {
  const Box3D a({0, 0, 0}, {1, 1, 1}, 0), b({0.5, 0, 0}, {1, 1, 1}, 0);
  const auto r = evaluate_sequence("s", {a, b}, {a, a}, {false, true}, {120, 1});
  CHECK(r.ious[0] == 1.0);
  CHECK(r.ious[1] == doctest::Approx(1.0 / 3.0));
  CHECK(r.errors[1] == doctest::Approx(0.5));
  CHECK(r.fallbacks == 1);
  CHECK_THROWS_AS(evaluate_sequence("s", {a}, {a, a}, {}, {}), InvalidArgument);
  CHECK_THROWS_AS(evaluate_sequence("s", {}, {}, {}, {}), InvalidArgument);
  CHECK_THROWS_AS(evaluate_sequence("s", {a}, {a}, {true, false}, {}), InvalidArgument);

  std::mt19937_64 rng(3);
  std::vector<OpeResult> rs;
  std::vector<double> all_i, all_e;
  for (int i = 0; i < 6; ++i) {
    rs.push_back(fake_result(rng, "r" + std::to_string(i), 5 + 3 * i, 30 * i, i % 3));
    all_i.insert(all_i.end(), rs.back().ious.begin(), rs.back().ious.end());
    all_e.insert(all_e.end(), rs.back().errors.begin(), rs.back().errors.end());
  }
  const auto agg = aggregate(rs);
  CHECK(agg.sequences == 6);
  CHECK(agg.frames == static_cast<int>(all_i.size()));
  // Frames are pooled, not sequence scores averaged.
  CHECK(agg.success == doctest::Approx(oracle::success_sweep(all_i)).epsilon(1e-12));
  CHECK(agg.precision == doctest::Approx(oracle::precision_sweep(all_e)).epsilon(1e-12));
  const auto empty = aggregate({});
  CHECK(empty.frames == 0);
  CHECK(empty.success == 0.0);
}

TEST_CASE("buckets") {
  std::mt19937_64 rng(4);
  std::vector<OpeResult> rs;
  const int pts[] = {10, 49, 50, 150, 399, 900, 2000, 75};
  for (int i = 0; i < 8; ++i) rs.push_back(fake_result(rng, "b" + std::to_string(i), 4 + i, pts[i], i % 4));
  rs.push_back(fake_result(rng, "nometa", 6, std::nullopt, std::nullopt));

  const auto sp = bucket_report(rs, BucketAxis::kSparsity, default_bucket_edges(BucketAxis::kSparsity));
  REQUIRE(sp.rows.size() == 6);
  CHECK(sp.excluded == 1);
  CHECK(sp.rows[0].sequences == 2);  // 10, 49
  CHECK(sp.rows[1].sequences == 2);  // 50, 75
  CHECK(sp.rows[2].sequences == 1);
  CHECK(sp.rows[3].sequences == 1);
  CHECK_FALSE(sp.rows[4].success.has_value());
  CHECK(sp.rows[5].sequences == 2);  // open-ended
  CHECK(std::isinf(sp.rows[5].hi));

  // Frame-weighted bucket scores recompose the pooled score over the same sequences.
  std::vector<OpeResult> with_meta(rs.begin(), rs.end() - 1);
  const auto agg = aggregate(with_meta);
  CHECK(recompose_success(sp) == doctest::Approx(agg.success).epsilon(1e-12));
  CHECK(recompose_precision(sp) == doctest::Approx(agg.precision).epsilon(1e-12));
  const auto dis = bucket_report(rs, BucketAxis::kDistractors, default_bucket_edges(BucketAxis::kDistractors));
  CHECK(recompose_success(dis) == doctest::Approx(agg.success).epsilon(1e-12));
  CHECK(dis.rows[2].sequences == 4);  // 2 and 3 share [2, 4)

  const std::string text = format_bucket_records(sp);
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  CHECK(text.find("\"success\":null") != std::string::npos);
  CHECK(text.find("\"excluded\":1") != std::string::npos);
  CHECK(format_aggregate_record(agg).rfind("{\"type\":\"aggregate\"", 0) == 0);
  CHECK(format_sequence_record(rs.back()).find("\"distractors\":null") != std::string::npos);

  CHECK_THROWS_AS(bucket_report(rs, BucketAxis::kSparsity, {}), InvalidArgument);
  CHECK_THROWS_AS(bucket_report(rs, BucketAxis::kSparsity, {0, 10, 10}), InvalidArgument);
}

TEST_CASE("run configuration") {
  const RunConfig def = run_config_from_json(nlohmann::json::object());
  CHECK(def.model.voxel.dims() == GridDims{64, 64, 40});
  CHECK(def.train.epochs == TrainConfig{}.epochs);

  // The serialized form parses back to the same document.
  const auto j = run_config_to_json(def);
  CHECK(run_config_to_json(run_config_from_json(nlohmann::json::parse(j.dump()))).dump() == j.dump());

  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "model.voxel.voxel_size=[0.2,0.2,0.2]");
  apply_override(doc, "model.backbone.base_channels=4");
  apply_override(doc, "model.backbone.fusion_stages=[false,false,true]");
  apply_override(doc, "model.loss=l1");
  apply_override(doc, "train.lr", "0.001");
  const RunConfig c = run_config_from_json(doc);
  CHECK(c.model.output_dims() == GridDims{2, 2, 2});
  CHECK(c.model.backbone.fusion_stages == std::vector<bool>{false, false, true});
  CHECK(c.model.loss == LossVariant::kL1);
  CHECK(c.train.adam.lr == 0.001);

  const ModelConfig back = model_config_from_json(model_config_to_json(c.model));
  CHECK(model_config_to_json(back).dump() == model_config_to_json(c.model).dump());

  auto rejects = [](const std::string& assignment) {
    nlohmann::json d = nlohmann::json::object();
    apply_override(d, assignment);
    CHECK_THROWS_AS(run_config_from_json(d), ConfigError);
  };
  rejects("model.voxel.voxel_sz=0.1");
  rejects("bogus=1");
  rejects("train.epochs=\"ten\"");
  rejects("train.epochs=-1");
  rejects("model.voxel.scale_ratio=2.5");
  rejects("model.loss=huber");
  rejects("model.backbone.fusion_downsampler=median");
  rejects("model.backbone.fusion_stages=[true]");
  nlohmann::json d = nlohmann::json::object();
  CHECK_THROWS_AS(apply_override(d, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(d, "a..b", "1"), ConfigError);

  const std::string dir = fixture::scratch_dir(VOXTRACK_TEST_TMP, "config");
  std::ofstream(dir + "/c.json") << R"({"train": {"epochs": 3}, "synth": {"sequences": 4}})";
  const RunConfig f = load_run_config(dir + "/c.json", {"train.epochs=5"});
  CHECK(f.train.epochs == 5);
  CHECK(f.synth.sequences == 4);
  std::ofstream(dir + "/bad.json") << "{ not json";
  CHECK_THROWS_AS(load_run_config(dir + "/bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir + "/missing.json"), IoError);
}
