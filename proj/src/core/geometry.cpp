// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "core/error.hpp"

namespace voxtrack {

double normalize_yaw(double yaw) {
  double r = std::remainder(yaw, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

double angle_diff(double to, double from) { return normalize_yaw(to - from); }

PointCloud::PointCloud(std::vector<Vec3> points, std::optional<std::vector<double>> intensity)
    : points_(std::move(points)), intensity_(std::move(intensity)) {
  validate();
}

void PointCloud::validate() const {
  for (const auto& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw InvalidArgument("point cloud contains a non-finite coordinate");
    }
  }
  if (intensity_ && intensity_->size() != points_.size()) {
    throw InvalidArgument("intensity length does not match point count");
  }
}

void PointCloud::push_back(Vec3 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
    throw InvalidArgument("point cloud contains a non-finite coordinate");
  }
  if (intensity_) throw InvalidArgument("cloud carries intensity; use push_back(p, intensity)");
  points_.push_back(p);
}

void PointCloud::push_back(Vec3 p, double intensity) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
    throw InvalidArgument("point cloud contains a non-finite coordinate");
  }
  if (!intensity_) {
    if (!points_.empty()) throw InvalidArgument("cloud has no intensity channel");
    intensity_.emplace();
  }
  points_.push_back(p);
  intensity_->push_back(intensity);
}

Box3D::Box3D(Vec3 center, BoxSize size, double yaw)
    : center_(center), size_(size), yaw_(normalize_yaw(yaw)) {
  if (!(size.w > 0.0) || !(size.h > 0.0) || !(size.l > 0.0)) {
    throw InvalidArgument("box size components must be strictly positive");
  }
  if (!std::isfinite(center.x) || !std::isfinite(center.y) || !std::isfinite(center.z) ||
      !std::isfinite(yaw) || !std::isfinite(size.w) || !std::isfinite(size.h) ||
      !std::isfinite(size.l)) {
    throw InvalidArgument("box parameters must be finite");
  }
}

bool Box3D::contains(Vec3 p, double inflate) const {
  const Vec3 q = to_canonical(p, *this);
  return std::abs(q.x) <= 0.5 * size_.l + inflate && std::abs(q.y) <= 0.5 * size_.w + inflate &&
         std::abs(q.z) <= 0.5 * size_.h + inflate;
}

void TrackedSequence::validate() const {
  if (frames.size() != gt_boxes.size()) {
    throw InvalidArgument("sequence frames and ground-truth boxes differ in length");
  }
  if (frames.size() < 2) throw InvalidArgument("sequence needs at least two frames");
}

std::array<std::array<double, 2>, 4> footprint(const Box3D& box) {
  const double c = std::cos(box.yaw());
  const double s = std::sin(box.yaw());
  const double hl = 0.5 * box.size().l;
  const double hw = 0.5 * box.size().w;
  const std::array<std::array<double, 2>, 4> local = {{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<std::array<double, 2>, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.center().x + c * local[i][0] - s * local[i][1],
              box.center().y + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

PointCloud crop_region(const PointCloud& cloud, const Box3D& box, double margin) {
  if (!(margin >= 0.0)) throw InvalidArgument("crop margin must be non-negative");
  const auto corners = footprint(box);
  double xmin = corners[0][0], xmax = corners[0][0];
  double ymin = corners[0][1], ymax = corners[0][1];
  for (const auto& c : corners) {
    xmin = std::min(xmin, c[0]);
    xmax = std::max(xmax, c[0]);
    ymin = std::min(ymin, c[1]);
    ymax = std::max(ymax, c[1]);
  }
  xmin -= margin;
  xmax += margin;
  ymin -= margin;
  ymax += margin;
  const double zmin = box.center().z - 0.5 * box.size().h - margin;
  const double zmax = box.center().z + 0.5 * box.size().h + margin;

  std::vector<Vec3> kept;
  std::optional<std::vector<double>> kept_intensity;
  if (cloud.intensity()) kept_intensity.emplace();
  const auto& pts = cloud.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3& p = pts[i];
    if (p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax && p.z >= zmin && p.z <= zmax) {
      kept.push_back(p);
      if (kept_intensity) kept_intensity->push_back((*cloud.intensity())[i]);
    }
  }
  return PointCloud(std::move(kept), std::move(kept_intensity));
}

Vec3 to_canonical(Vec3 p, const Box3D& ref_box) {
  const Vec3 d = p - ref_box.center();
  const double c = std::cos(ref_box.yaw());
  const double s = std::sin(ref_box.yaw());
  return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
}

Vec3 from_canonical(Vec3 p, const Box3D& ref_box) {
  const double c = std::cos(ref_box.yaw());
  const double s = std::sin(ref_box.yaw());
  return Vec3{c * p.x - s * p.y, s * p.x + c * p.y, p.z} + ref_box.center();
}

namespace {

template <typename Fn>
PointCloud map_points(const PointCloud& cloud, Fn&& fn) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points()) out.push_back(fn(p));
  return PointCloud(std::move(out), cloud.intensity());
}

}  // namespace

PointCloud canonicalize(const PointCloud& cloud, const Box3D& ref_box) {
  return map_points(cloud, [&](Vec3 p) { return to_canonical(p, ref_box); });
}

PointCloud decanonicalize(const PointCloud& cloud, const Box3D& ref_box) {
  return map_points(cloud, [&](Vec3 p) { return from_canonical(p, ref_box); });
}

BoxOffset offset_label(const Box3D& prev_box, const Box3D& cur_box) {
  const Vec3 d = to_canonical(cur_box.center(), prev_box);
  return {d.x, d.y, d.z, angle_diff(cur_box.yaw(), prev_box.yaw())};
}

Box3D apply_offset(const Box3D& box, const BoxOffset& off) {
  const Vec3 c = from_canonical({off.dx, off.dy, off.dz}, box);
  return Box3D(c, box.size(), box.yaw() + off.dtheta);
}

namespace {

using Pt = std::array<double, 2>;

double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Sutherland-Hodgman clipping of a convex polygon against a convex CCW clip polygon.
std::vector<Pt> clip_convex(std::vector<Pt> subject, const std::array<Pt, 4>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Pt& a = clip[e];
    const Pt& b = clip[(e + 1) % clip.size()];
    // Points within ~1e-9 m of the clip line count as inside.
    const double tol = 1e-9 * std::hypot(b[0] - a[0], b[1] - a[1]);
    std::vector<Pt> out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Pt& p = subject[i];
      const Pt& q = subject[(i + 1) % subject.size()];
      const double sp = cross(a, b, p);
      const double sq = cross(a, b, q);
      const bool p_in = sp >= -tol;
      const bool q_in = sq >= -tol;
      if (p_in) out.push_back(p);
      if (p_in != q_in) {
        const double t = std::clamp(sp / (sp - sq), 0.0, 1.0);
        out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

double polygon_area(const std::vector<Pt>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % poly.size()];
    acc += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(acc);
}

auto box_key(const Box3D& b) {
  return std::make_tuple(b.center().x, b.center().y, b.center().z, b.size().w, b.size().h,
                         b.size().l, b.yaw());
}

double iou3d_ordered(const Box3D& a, const Box3D& b) {
  const double za0 = a.center().z - 0.5 * a.size().h, za1 = a.center().z + 0.5 * a.size().h;
  const double zb0 = b.center().z - 0.5 * b.size().h, zb1 = b.center().z + 0.5 * b.size().h;
  const double dz = std::min(za1, zb1) - std::max(za0, zb0);
  if (dz <= 0.0) return 0.0;

  const auto fa = footprint(a);
  const auto fb = footprint(b);
  const double area = polygon_area(clip_convex({fa.begin(), fa.end()}, fb));
  const double inter = area * dz;
  // Volumes use the same footprint and extent arithmetic as the overlap, so identical boxes give exactly 1.
  const double va = polygon_area({fa.begin(), fa.end()}) * (za1 - za0);
  const double vb = polygon_area({fb.begin(), fb.end()}) * (zb1 - zb0);
  const double uni = va + vb - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace

double iou3d(const Box3D& a, const Box3D& b) {
  // Fixed argument order makes the result bitwise symmetric.
  return box_key(b) < box_key(a) ? iou3d_ordered(b, a) : iou3d_ordered(a, b);
}

double center_distance(const Box3D& a, const Box3D& b) {
  const Vec3 d = a.center() - b.center();
  return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

}  // namespace voxtrack
