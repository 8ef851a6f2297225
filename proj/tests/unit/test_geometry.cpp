// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "core/error.hpp"
#include "core/geometry.hpp"
#include "support/oracles.hpp"

using namespace voxtrack;

namespace {

Box3D random_box(std::mt19937_64& rng, double spread = 5.0) {
  std::uniform_real_distribution<double> c(-spread, spread), s(0.3, 4.0), y(-4.0, 4.0);
  return Box3D({c(rng), c(rng), c(rng)}, {s(rng), s(rng), s(rng)}, y(rng));
}

}  // namespace

TEST_CASE("normalize_yaw wraps into (-pi, pi] and is idempotent") {
  CHECK(normalize_yaw(kPi) == doctest::Approx(kPi));
  CHECK(normalize_yaw(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_yaw(3 * kPi) == doctest::Approx(kPi));
  CHECK(normalize_yaw(0.5) == 0.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double y = normalize_yaw(u(rng));
    CHECK(y > -kPi);
    CHECK(y <= kPi);
    CHECK(normalize_yaw(y) == y);
  }
}

TEST_CASE("point cloud and box invariants") {
  CHECK_THROWS_AS(PointCloud({{0, 0, NAN}}), InvalidArgument);
  CHECK_THROWS_AS(PointCloud({{0, 0, 0}}, std::vector<double>{1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(Box3D({0, 0, 0}, {0.0, 1, 1}, 0), InvalidArgument);
  CHECK_THROWS_AS(Box3D({0, 0, 0}, {1, -1, 1}, 0), InvalidArgument);
  CHECK_THROWS_AS(Box3D({0, INFINITY, 0}, {1, 1, 1}, 0), InvalidArgument);
  CHECK(Box3D({0, 0, 0}, {1, 1, 1}, 7.0).yaw() == doctest::Approx(normalize_yaw(7.0)));

  TrackedSequence seq;
  seq.frames.resize(1);
  seq.gt_boxes.resize(1);
  CHECK_THROWS_AS(seq.validate(), InvalidArgument);
  seq.frames.resize(2);
  CHECK_THROWS_AS(seq.validate(), InvalidArgument);
  seq.gt_boxes.resize(2);
  CHECK_NOTHROW(seq.validate());
}

TEST_CASE("crop_region keeps exactly the points in the enlarged hull") {
  const Box3D box({0, 0, 0}, {1, 1, 1}, 0.0);
  SUBCASE("center is kept") {
    PointCloud c({{0, 0, 0}});
    CHECK(crop_region(c, box, 0.3).size() == 1);
  }
  SUBCASE("hull face is closed") {
    PointCloud c({{0.5, 0, 0}, {0, -0.5, 0.5}, {0.5000001, 0, 0}});
    const auto out = crop_region(c, box, 0.0);
    REQUIRE(out.size() == 2);
    CHECK(out.points()[0] == Vec3{0.5, 0, 0});
  }
  SUBCASE("matches a brute-force scan with order preserved") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    PointCloud c;
    for (int i = 0; i < 200; ++i) c.push_back({u(rng), u(rng), u(rng)}, static_cast<double>(i));
    const Box3D rot({0.2, -0.1, 0.0}, {1, 1, 1}, 0.6);
    const auto fp = footprint(rot);
    double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
    for (const auto& p : fp) {
      lo_x = std::min(lo_x, p[0]);
      hi_x = std::max(hi_x, p[0]);
      lo_y = std::min(lo_y, p[1]);
      hi_y = std::max(hi_y, p[1]);
    }
    std::vector<double> want;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Vec3& p = c.points()[i];
      if (p.x >= lo_x - 1 && p.x <= hi_x + 1 && p.y >= lo_y - 1 && p.y <= hi_y + 1 &&
          p.z >= -1.5 && p.z <= 1.5) {
        want.push_back((*c.intensity())[i]);
      }
    }
    const auto out = crop_region(c, rot, 1.0);
    REQUIRE(out.intensity().has_value());
    CHECK(*out.intensity() == want);
  }
  CHECK_THROWS_AS(crop_region(PointCloud(), box, -0.1), InvalidArgument);
}

TEST_CASE("canonical frame") {
  const Box3D ref({1, 2, 3}, {1, 2, 1}, 0.7);
  CHECK(to_canonical({1, 2, 3}, ref) == Vec3{0, 0, 0});
  const Box3D id({0, 0, 0}, {1, 1, 1}, 0.0);
  const Vec3 p{0.3, -0.4, 1.5};
  CHECK(to_canonical(p, id) == p);

  // A point one meter ahead along the heading maps to +x.
  const Vec3 ahead{1 + std::cos(0.7), 2 + std::sin(0.7), 3};
  const Vec3 q = to_canonical(ahead, ref);
  CHECK(q.x == doctest::Approx(1.0));
  CHECK(q.y == doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  PointCloud c;
  for (int i = 0; i < 300; ++i) c.push_back({u(rng), u(rng), u(rng)});
  const auto back = decanonicalize(canonicalize(c, ref), ref);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(std::abs(back.points()[i].x - c.points()[i].x) < 1e-9);
    CHECK(std::abs(back.points()[i].y - c.points()[i].y) < 1e-9);
    CHECK(std::abs(back.points()[i].z - c.points()[i].z) < 1e-9);
  }
}

TEST_CASE("offset_label and apply_offset") {
  const Box3D b({1, 1, 0}, {2, 1.5, 4}, 0.4);
  CHECK(offset_label(b, b) == BoxOffset{0, 0, 0, 0});
  const Box3D ahead({1 + std::cos(0.4), 1 + std::sin(0.4), 0}, b.size(), 0.4);
  const BoxOffset o = offset_label(b, ahead);
  CHECK(o.dx == doctest::Approx(1.0));
  CHECK(std::abs(o.dy) < 1e-12);
  CHECK(std::abs(o.dz) < 1e-12);
  CHECK(o.dtheta == 0.0);

  CHECK(apply_offset(b, {}) == b);
  const Box3D flipped = apply_offset(apply_offset(b, {0, 0, 0, kPi}), {0, 0, 0, kPi});
  CHECK(flipped.yaw() == doctest::Approx(b.yaw()));

  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Box3D p = random_box(rng), c(random_box(rng).center(), p.size(), random_box(rng).yaw());
    const BoxOffset off = offset_label(p, c);
    CHECK(off.dtheta > -kPi);
    CHECK(off.dtheta <= kPi);
    const Box3D r = apply_offset(p, off);
    CHECK(std::abs(r.center().x - c.center().x) < 1e-9);
    CHECK(std::abs(r.center().y - c.center().y) < 1e-9);
    CHECK(std::abs(r.center().z - c.center().z) < 1e-9);
    CHECK(std::abs(angle_diff(r.yaw(), c.yaw())) < 1e-9);
  }
}

TEST_CASE("iou3d") {
  std::mt19937_64 rng(5);
  const Box3D a({0, 0, 0}, {1.6, 1.5, 3.9}, 0.3);
  CHECK(iou3d(a, a) == 1.0);
  const Box3D far({20, 0, 0}, {1, 1, 1}, 1.0);
  CHECK(iou3d(a, far) == 0.0);
  const Box3D above({0, 0, 1.5}, a.size(), 0.3);
  CHECK(iou3d(a, above) == 0.0);

  // Unit cube against its copy shifted by half an edge: 1/3.
  const Box3D u1({0, 0, 0}, {1, 1, 1}, 0.0), u2({0.5, 0, 0}, {1, 1, 1}, 0.0);
  CHECK(iou3d(u1, u2) == doctest::Approx(1.0 / 3.0));
  // Square against itself rotated 45 degrees: overlap is the regular octagon.
  const Box3D r1({0, 0, 0}, {1, 1, 1}, 0.0), r2({0, 0, 0}, {1, 1, 1}, kPi / 4);
  const double oct = 2.0 * (std::sqrt(2.0) - 1.0);
  CHECK(iou3d(r1, r2) == doctest::Approx(oct / (2.0 - oct)));

  for (int i = 0; i < 200; ++i) {
    const Box3D p = random_box(rng, 1.0), q = random_box(rng, 1.0);
    const double v = iou3d(p, q);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == iou3d(q, p));
    CHECK(iou3d(p, p) == 1.0);
  }
  // A cheap version of the Monte-Carlo comparison; the acceptance suite runs the full one.
  for (int i = 0; i < 10; ++i) {
    const Box3D p = random_box(rng, 0.8), q = random_box(rng, 0.8);
    CHECK(std::abs(iou3d(p, q) - oracle::monte_carlo_iou(p, q, 200000, rng)) < 2e-2);
  }
}

TEST_CASE("center_distance") {
  const Box3D a({0, 0, 0}, {1, 1, 1}, 0), b({3, 4, 0}, {2, 2, 2}, 1);
  CHECK(center_distance(a, a) == 0.0);
  CHECK(center_distance(a, b) == doctest::Approx(5.0));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const Box3D x = random_box(rng), y = random_box(rng), z = random_box(rng);
    CHECK(center_distance(x, z) <= center_distance(x, y) + center_distance(y, z) + 1e-12);
  }
}
