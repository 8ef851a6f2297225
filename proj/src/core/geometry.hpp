// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace voxtrack {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Wraps an angle into (-pi, pi]. Idempotent.
double normalize_yaw(double yaw);

/// Shortest signed angular difference `to - from`, in (-pi, pi].
double angle_diff(double to, double from);

/// Ordered 3D points with optional per-point intensity.
///
/// Coordinates must be finite and, when intensity is present, it has one
/// entry per point. `validate()` enforces both.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points,
                      std::optional<std::vector<double>> intensity = std::nullopt);

  const std::vector<Vec3>& points() const { return points_; }
  const std::optional<std::vector<double>>& intensity() const { return intensity_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  void push_back(Vec3 p);
  void push_back(Vec3 p, double intensity);

 private:
  void validate() const;

  std::vector<Vec3> points_;
  std::optional<std::vector<double>> intensity_;
};

/// Box dimensions. `l` runs along the heading axis (local x), `w` across it
/// (local y), `h` vertically (local z).
struct BoxSize {
  double w = 1.0;
  double h = 1.0;
  double l = 1.0;

  friend bool operator==(const BoxSize&, const BoxSize&) = default;
};

/// 7-DoF z-up oriented box. The constructor enforces positive sizes and
/// stores yaw normalized to (-pi, pi].
class Box3D {
 public:
  Box3D() = default;
  Box3D(Vec3 center, BoxSize size, double yaw);

  const Vec3& center() const { return center_; }
  const BoxSize& size() const { return size_; }
  double yaw() const { return yaw_; }

  /// True when `p` lies inside the closed oriented box.
  bool contains(Vec3 p, double inflate = 0.0) const;

  friend bool operator==(const Box3D&, const Box3D&) = default;

 private:
  Vec3 center_{};
  BoxSize size_{};
  double yaw_ = 0.0;
};

/// (dx, dy, dz) are expressed in the canonical frame of the reference box;
/// dtheta is normalized to (-pi, pi].
struct BoxOffset {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double dtheta = 0.0;

  std::array<double, 4> as_array() const { return {dx, dy, dz, dtheta}; }
  friend bool operator==(const BoxOffset&, const BoxOffset&) = default;
};

struct TrackedSequence {
  std::vector<PointCloud> frames;
  std::vector<Box3D> gt_boxes;
  std::string category;

  /// Throws InvalidArgument unless frames and boxes align and there are >= 2.
  void validate() const;
};

PointCloud crop_region(const PointCloud& cloud, const Box3D& box, double margin);

/// Expresses `cloud` in the frame of `ref_box`: translate by -center, then
/// rotate about z by -yaw.
PointCloud canonicalize(const PointCloud& cloud, const Box3D& ref_box);
PointCloud decanonicalize(const PointCloud& cloud, const Box3D& ref_box);
Vec3 to_canonical(Vec3 p, const Box3D& ref_box);
Vec3 from_canonical(Vec3 p, const Box3D& ref_box);

BoxOffset offset_label(const Box3D& prev_box, const Box3D& cur_box);
Box3D apply_offset(const Box3D& box, const BoxOffset& off);

/// Corners of the box footprint in the xy plane, counter-clockwise.
std::array<std::array<double, 2>, 4> footprint(const Box3D& box);

double iou3d(const Box3D& a, const Box3D& b);
double center_distance(const Box3D& a, const Box3D& b);

}  // namespace voxtrack
