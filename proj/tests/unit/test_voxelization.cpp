// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "core/error.hpp"
#include "core/voxelization.hpp"

using namespace voxtrack;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi), in(0.0, 1.0);
  PointCloud c;
  for (int i = 0; i < n; ++i) c.push_back({u(rng), u(rng), u(rng)}, in(rng));
  return c;
}

}  // namespace

TEST_CASE("config validation and grid arithmetic") {
  VoxelizerConfig cfg;
  CHECK(cfg.dims() == GridDims{64, 64, 40});
  CHECK(cfg.large().dims() == GridDims{32, 32, 20});
  CHECK(cfg.scale_ratio == 2.0);
  CHECK(cells_for_span(6.4, 0.1) == 64);
  CHECK(cells_for_span(1.0, 0.3) == 4);

  VoxelizerConfig f = cfg;
  f.extent_min = {-3.2, -3.2, -1.6};
  f.extent_max = {3.2, 3.2, 1.6};
  CHECK(f.dims() == GridDims{64, 64, 32});
  CHECK(f.large().dims() == GridDims{32, 32, 16});

  VoxelizerConfig bad = cfg;
  bad.voxel_size[1] = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.extent_max[2] = bad.extent_min[2];
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.scale_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("voxel_index follows the floor of the shifted coordinate") {
  const std::array<double, 3> mn{-1, -1, -1}, sz{0.5, 0.5, 0.5};
  const GridDims dims{4, 4, 4};
  VoxelCoord c;
  REQUIRE(voxel_index({-1, -1, -1}, mn, sz, dims, &c));
  CHECK(c == VoxelCoord{0, 0, 0});
  REQUIRE(voxel_index({-0.1, 0.0, 0.99}, mn, sz, dims, &c));
  CHECK(c == VoxelCoord{1, 2, 3});
  CHECK_FALSE(voxel_index({1.0, 0, 0}, mn, sz, dims, &c));
  CHECK_FALSE(voxel_index({-1.0001, 0, 0}, mn, sz, dims, &c));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int n = 0; n < 2000; ++n) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    const double raw[3] = {p.x, p.y, p.z};
    bool inside = true;
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      idx[a] = static_cast<int>(std::floor((raw[a] - mn[static_cast<std::size_t>(a)]) / 0.5));
      inside = inside && idx[a] >= 0 && idx[a] < 4;
    }
    VoxelCoord got;
    REQUIRE(voxel_index(p, mn, sz, dims, &got) == inside);
    if (inside) CHECK(got == VoxelCoord{idx[0], idx[1], idx[2]});
  }
}

TEST_CASE("voxelize and encode_dynamic") {
  VoxelizerConfig cfg;
  SUBCASE("single point at the extent minimum") {
    PointCloud c({{-3.2, -3.2, -2.0}});
    const auto g = encode_dynamic(voxelize(c, cfg));
    REQUIRE(g.size() == 1);
    CHECK(g.coords[0] == VoxelCoord{0, 0, 0});
    CHECK(g.channels == 3);
    CHECK(g.feature(0)[0] == -3.2);
  }
  SUBCASE("mean of two points") {
    PointCloud c({{0.01, 0.01, 0.01}, {0.03, 0.05, 0.07}});
    const auto g = encode_dynamic(voxelize(c, cfg));
    REQUIRE(g.size() == 1);
    REQUIRE(g.channels == 3);
    CHECK(g.feature(0)[0] == doctest::Approx(0.02));
    CHECK(g.feature(0)[2] == doctest::Approx(0.04));
    CHECK(g.point_counts[0] == 2);
  }
  SUBCASE("out-of-extent points are dropped and counted") {
    PointCloud c({{0, 0, 0}, {10, 0, 0}, {0, 0, 2.0}});
    const auto g = voxelize(c, cfg);
    CHECK(g.size() == 1);
    CHECK(g.dropped_points == 2);
    CHECK(g.total_points() == 1);
  }
  SUBCASE("empty cloud") {
    const auto g = encode_dynamic(voxelize(PointCloud(), cfg));
    CHECK(g.size() == 0);
    CHECK(g.total_points() == 0);
  }
  SUBCASE("random voxel means against an independent accumulation") {
    std::mt19937_64 rng(4);
    const PointCloud c = random_cloud(rng, 800, -1.0, 1.0);
    VoxelizerConfig coarse;
    coarse.voxel_size = {0.4, 0.4, 0.4};
    const auto g = encode_dynamic(voxelize(c, coarse));
    std::map<VoxelCoord, std::vector<std::array<double, 3>>> members;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Vec3& p = c.points()[i];
      VoxelCoord v;
      REQUIRE(voxel_index(p, coarse.extent_min, coarse.voxel_size, coarse.dims(), &v));
      members[v].push_back({p.x, p.y, p.z});
    }
    REQUIRE(g.size() == members.size());
    std::int64_t total = 0;
    for (std::size_t r = 0; r < g.size(); ++r) {
      auto pts = members.at(g.coords[r]);
      // Same summation order as a sort by (x, y, z).
      std::sort(pts.begin(), pts.end());
      total += g.point_counts[r];
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double s = 0.0;
        for (const auto& p : pts) s += p[ch];
        CHECK(g.feature(r)[ch] == doctest::Approx(s / static_cast<double>(pts.size())).epsilon(1e-14));
        CHECK(std::isfinite(g.feature(r)[ch]));
      }
    }
    CHECK(total == static_cast<std::int64_t>(c.size()));
    CHECK(std::is_sorted(g.coords.begin(), g.coords.end()));
    CHECK(std::adjacent_find(g.coords.begin(), g.coords.end()) == g.coords.end());
  }
}

TEST_CASE("voxelization is permutation invariant") {
  std::mt19937_64 rng(8);
  VoxelizerConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud c = random_cloud(rng, 500, -2.0, 2.0);
    std::vector<std::size_t> perm(c.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    PointCloud p;
    for (auto i : perm) p.push_back(c.points()[i], (*c.intensity())[i]);
    const auto a = encode_dynamic(voxelize(c, cfg)), b = encode_dynamic(voxelize(p, cfg));
    CHECK(a.coords == b.coords);
    CHECK(a.features == b.features);
    CHECK(a.point_counts == b.point_counts);
  }
}

TEST_CASE("fuse_frames") {
  VoxelizerConfig cfg;
  PointCloud prev({{0.05, 0.05, 0.05}, {1.05, 0.05, 0.05}});
  PointCloud cur({{1.05, 0.05, 0.05}, {2.05, 0.05, 0.05}});
  const auto gp = encode_dynamic(voxelize(prev, cfg)), gc = encode_dynamic(voxelize(cur, cfg));
  const auto f = fuse_frames(gp, gc);
  REQUIRE(f.size() == 3);
  CHECK(f.channels == 6);
  // Shared voxel carries [prev | cur]; the others are zero on the missing side.
  CHECK(f.feature(0)[0] == doctest::Approx(0.05));
  CHECK(f.feature(0)[3] == 0.0);
  CHECK(f.feature(1)[0] == doctest::Approx(1.05));
  CHECK(f.feature(1)[3] == doctest::Approx(1.05));
  CHECK(f.feature(2)[0] == 0.0);
  CHECK(f.feature(2)[3] == doctest::Approx(2.05));

  const auto only_prev = fuse_frames(gp, encode_dynamic(voxelize(PointCloud(), cfg)));
  REQUIRE(only_prev.size() == gp.size());
  for (std::size_t r = 0; r < gp.size(); ++r) {
    for (int c = 0; c < 3; ++c) CHECK(only_prev.feature(r)[c] == gp.feature(r)[c]);
    for (int c = 3; c < 6; ++c) CHECK(only_prev.feature(r)[c] == 0.0);
  }

  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto a = encode_dynamic(voxelize(random_cloud(rng, 60, -1, 1), cfg));
    const auto b = encode_dynamic(voxelize(random_cloud(rng, 60, -1, 1), cfg));
    std::set<VoxelCoord> want(a.coords.begin(), a.coords.end());
    want.insert(b.coords.begin(), b.coords.end());
    const auto u = fuse_frames(a, b);
    CHECK(std::vector<VoxelCoord>(want.begin(), want.end()) == u.coords);
  }

  VoxelGrid other = gc;
  other.dims = {2, 2, 2};
  CHECK_THROWS_AS(fuse_frames(gp, other), ShapeError);
}

TEST_CASE("dual_voxelize") {
  VoxelizerConfig cfg;
  const auto empty = dual_voxelize(PointCloud(), PointCloud(), cfg);
  CHECK(empty.large.size() == 0);
  CHECK(empty.small.size() == 0);
  CHECK(empty.large.dims == GridDims{32, 32, 20});
  CHECK(empty.small.dims == GridDims{64, 64, 40});

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.1, 3.1), uz(-1.9, 1.9);
  for (int t = 0; t < 200; ++t) {
    PointCloud one({{u(rng), u(rng), uz(rng)}});
    const auto d = dual_voxelize(one, PointCloud(), cfg);
    REQUIRE(d.large.size() == 1);
    REQUIRE(d.small.size() == 1);
    CHECK(d.small.coords[0].i / 2 == d.large.coords[0].i);
    CHECK(d.small.coords[0].j / 2 == d.large.coords[0].j);
    CHECK(d.small.coords[0].k / 2 == d.large.coords[0].k);
    CHECK(d.small.channels == 6);
  }
}
