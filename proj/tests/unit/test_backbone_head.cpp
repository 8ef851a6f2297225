// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "core/backbone.hpp"
#include "core/error.hpp"
#include "core/head.hpp"
#include "core/model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace voxtrack;

namespace {

DualVoxelGrids random_grids(std::mt19937_64& rng, const VoxelizerConfig& v, int n) {
  return dual_voxelize(fixture::cloud_around(rng, {0, 0, 0}, 1.5, n),
                       fixture::cloud_around(rng, {0.2, 0, 0}, 1.5, n), v);
}

}  // namespace

TEST_CASE("default configuration dimensions") {
  const ModelConfig m;
  CHECK(m.voxel.dims() == GridDims{64, 64, 40});
  CHECK(m.output_dims() == GridDims{4, 4, 3});
  CHECK(m.backbone.output_channels() == 128);
  CHECK(m.bev_channels() == 384);
  const ModelConfig c = fixture::compact_model();
  CHECK(c.output_dims() == GridDims{2, 2, 2});
  CHECK(c.bev_channels() == 64);
}

TEST_CASE("every stage halves the grid and doubles the width in both streams") {
  std::mt19937_64 rng(3);
  for (int stages : {1, 2, 3}) {
    for (bool all_fusion : {true, false}) {
      ModelConfig m = fixture::tiny_model();
      m.backbone.num_stages = stages;
      if (!all_fusion) {
        m.backbone.fusion_stages.assign(static_cast<std::size_t>(stages), false);
        m.backbone.fusion_stages.back() = true;
      }
      const Model model = Model::create(m, 1);
      BackboneTrace trace;
      const auto grids = random_grids(rng, m.voxel, 60);
      const auto out = backbone_forward(grids.large, grids.small, model.params(), m.backbone, &trace);
      REQUIRE(trace.stages.size() == static_cast<std::size_t>(2 * stages));
      for (const auto& s : trace.stages) {
        CHECK(s.out_dims == ceil_div(s.in_dims, 2));
        CHECK(s.out_channels == 2 * s.in_channels);
        CHECK(s.in_channels == m.backbone.stage_in_channels(s.stage));
      }
      // Small-stream dims stay one ratio step above large-stream dims.
      for (const auto& f : trace.pre_fusion) CHECK(ceil_div(f.small.dims(), 2) == f.large.dims());
      CHECK(out.dims() == m.output_dims());
      CHECK(out.channels() == m.backbone.output_channels());
      for (int st = 1; st <= stages; ++st) {
        const bool want = all_fusion || st == stages;
        CHECK(model.params().contains("backbone.cif" + std::to_string(st) + ".to_large.weight") == want);
        // The last stage fuses only into the large stream.
        CHECK(model.params().contains("backbone.cif" + std::to_string(st) + ".to_small.weight") ==
              (want && st < stages));
      }
    }
  }
}

TEST_CASE("backbone configuration errors") {
  BackboneConfig b;
  b.fusion_stages = {true, false};
  CHECK_THROWS_AS(b.validate(), ConfigError);
  b = {};
  b.num_stages = 0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
  ModelConfig m;
  m.backbone.scale_ratio = 3;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  HeadConfig h;
  h.log_sigma_max = h.log_sigma_min;
  CHECK_THROWS_AS(h.validate(), ConfigError);

  // Grids of the wrong channel width are rejected.
  const ModelConfig t = fixture::tiny_model();
  const Model model = Model::create(t, 1);
  VoxelGrid g = encode_dynamic(voxelize(PointCloud({{0, 0, 0}}), t.voxel));
  CHECK_THROWS_AS(backbone_forward(g, g, model.params(), t.backbone), ShapeError);
}

TEST_CASE("to_bev stacks height into channels and conserves values") {
  std::mt19937_64 rng(5);
  const auto x = oracle::random_sparse(rng, {3, 4, 2}, 3, 0.5);
  const auto bev = to_bev(x);
  CHECK(bev.shape() == ad::Shape{3, 4, 6});
  double a = 0, b = 0;
  for (double v : x.features().values()) a += v;
  for (double v : bev.values()) b += v;
  CHECK(a == doctest::Approx(b));
  const auto dense = oracle::to_dense(x);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 2; ++k)
        for (std::size_t c = 0; c < 3; ++c) {
          CHECK(bev.values()[(static_cast<std::size_t>(i) * 4 + j) * 6 + k * 3 + c] == dense.at(i, j, k, c));
        }
}

TEST_CASE("head output contract") {
  std::mt19937_64 rng(8);
  ad::ParamStore store;
  HeadConfig h;
  h.hidden = {6};
  register_head(store, 5, h, rng);
  const auto bev = ad::Tensor::constant({2, 2, 5}, oracle::random_vec(rng, 20, 5.0));
  const auto p = head_forward(bev, store, h);
  CHECK(p.mu.numel() == 4);
  CHECK(p.log_sigma.numel() == 4);
  for (double v : p.log_sigma.values()) {
    CHECK(v >= h.log_sigma_min);
    CHECK(v <= h.log_sigma_max);
  }
  CHECK_THROWS_AS(head_forward(ad::Tensor::zeros({4, 5}), store, h), ShapeError);

  Model m = Model::create(fixture::tiny_model(), 2);
  m.zero_output();
  const auto z = m.forward(fixture::cloud_around(rng, {0, 0, 0}, 1, 40), fixture::cloud_around(rng, {0, 0, 0}, 1, 40));
  for (double v : z.mu.values()) CHECK(v == 0.0);
  const auto off = z.offset();
  CHECK(off == BoxOffset{0, 0, 0, 0});
}

TEST_CASE("rle loss") {
  OffsetPrediction p;
  p.mu = ad::Tensor::parameter({4}, {0.5, -0.2, 0.1, 0.3});
  p.log_sigma = ad::Tensor::parameter({4}, {0, 0, 0, 0});
  const BoxOffset label{0.5, -0.2, 0.1, 0.3};
  CHECK(rle_loss(p, label).item() == doctest::Approx(4.0 * std::log(2.0)));
  CHECK(rle_loss(p, label, LossVariant::kL1).item() == 0.0);

  // Larger residuals cost more; the yaw residual wraps.
  const BoxOffset off{1.5, -0.2, 0.1, 0.3};
  CHECK(rle_loss(p, off).item() == doctest::Approx(4.0 * std::log(2.0) + 1.0));
  const BoxOffset wrapped{0.5, -0.2, 0.1, 0.3 + 2 * kPi};
  CHECK(rle_loss(p, wrapped).item() == doctest::Approx(4.0 * std::log(2.0)));

  // mu below the label: loss decreases as mu rises. |r| < sigma: loss decreases as sigma shrinks.
  p.mu.zero_grad();
  p.log_sigma.zero_grad();
  backward(rle_loss(p, off));
  CHECK(p.mu.grad()[0] < 0.0);
  CHECK(p.log_sigma.grad()[0] == doctest::Approx(0.0));
  CHECK(p.log_sigma.grad()[1] > 0.0);

  auto mu = ad::Tensor::parameter({4}, {0.1, 0.2, -0.3, 0.4});
  auto ls = ad::Tensor::parameter({4}, {0.2, -0.1, 0.3, 0.0});
  const BoxOffset t{0.7, -0.5, 0.2, -0.6};
  for (auto variant : {LossVariant::kRle, LossVariant::kL1}) {
    const auto r = oracle::grad_check([&] { return rle_loss({mu, ls}, t, variant); },
                                      variant == LossVariant::kRle ? std::vector{mu, ls} : std::vector{mu});
    CHECK(r.failed == 0);
    CHECK(r.checked >= 4);
  }
}

TEST_CASE("end-to-end network gradients") {
  std::mt19937_64 rng(4);
  const ModelConfig cfg = fixture::tiny_model();
  const Model model = Model::create(cfg, 3);
  const auto grids = random_grids(rng, cfg.voxel, 30);
  const BoxOffset label{0.3, -0.1, 0.05, 0.2};
  std::vector<ad::Tensor> ps;
  for (const auto& name : model.params().names()) ps.push_back(model.params().get(name));
  const auto r = oracle::grad_check([&] { return rle_loss(model.forward(grids), label); }, ps);
  CHECK(r.failed == 0);
  CHECK(r.checked > 50);
}
