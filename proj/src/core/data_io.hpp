// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/geometry.hpp"

namespace voxtrack {

/// Per-sequence facts used for robustness bucketing.
struct SequenceMeta {
  std::optional<int> first_frame_points;  // target points in the first frame
  std::optional<int> distractors;         // other objects of the same kind
};

struct SequenceRecord {
  std::string name;
  TrackedSequence seq;
  SequenceMeta meta;
};

// --- KITTI velodyne -------------------------------------------------------

/// Consecutive 16-byte records of little-endian float32 (x, y, z, intensity).
PointCloud read_velodyne(const std::string& path);
/// Missing intensity is written as 0.
void write_velodyne(const std::string& path, const PointCloud& cloud);

// --- KITTI tracking labels and calibration ----------------------------------

struct KittiLabel {
  int frame = 0;
  int track_id = -1;
  std::string type;
  double h = 0.0, w = 0.0, l = 0.0;  // meters
  double x = 0.0, y = 0.0, z = 0.0;  // camera frame, bottom-face center
  double rotation_y = 0.0;
};

/// Rigid LiDAR -> rectified camera transform, row-major 4x4.
struct KittiCalib {
  std::array<double, 16> velo_to_cam{};
  std::array<double, 16> cam_to_velo{};

  Vec3 to_camera(Vec3 p) const;
  Vec3 to_lidar(Vec3 p) const;
};

/// Reads `R_rect`/`R0_rect` and `Tr_velo_cam`/`Tr_velo_to_cam`. Throws
/// FormatError if a rotation block is not orthonormal within 1e-6.
KittiCalib read_kitti_calib(const std::string& path);
std::vector<KittiLabel> read_kitti_labels(const std::string& path);
/// Camera-frame y-down label to a LiDAR-frame z-up box.
Box3D label_to_lidar_box(const KittiLabel& label, const KittiCalib& calib);

/// Files of a single KITTI frame: scan path, its labels and the sequence calibration.
struct KittiFrameRef {
  std::string velodyne_path;
  std::vector<KittiLabel> labels;
  KittiCalib calib;
};

struct KittiLoadOptions {
  /// Points farther than this (in xy) from the frame's ground-truth center
  /// are dropped at load time to bound memory. <= 0 keeps everything.
  double keep_radius = 30.0;
};

/// Expects `<root>/velodyne/<seq>/NNNNNN.bin`, `<root>/label_02/<seq>.txt`
/// and `<root>/calib/<seq>.txt`. One record per track of `category` with
/// >= 2 consecutive annotated frames; tracks with gaps are split.
std::vector<SequenceRecord> kitti_to_tracklets(const std::string& root, const std::string& sequence,
                                               const std::string& category,
                                               const KittiLoadOptions& opts = {});

// --- Synthetic scenes ---------------------------------------------------------

struct SyntheticSceneConfig {
  std::array<double, 2> width_range{1.6, 2.0};
  std::array<double, 2> height_range{1.4, 1.7};
  std::array<double, 2> length_range{3.6, 4.6};
  /// Translation per frame along the heading, meters.
  std::array<double, 2> speed_range{0.3, 1.0};
  /// Bound on the constant per-sequence yaw rate, radians per frame.
  double max_yaw_rate = 0.05;
  /// Target surface samples per frame before dropout.
  std::array<int, 2> points_range{100, 400};
  /// Ground points per square meter within `clutter_radius` of the target.
  double clutter_density = 0.5;
  double clutter_radius = 8.0;
  double dropout = 0.1;
  int distractors = 0;
  double jitter_sigma = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticSequence {
  TrackedSequence seq;
  SequenceMeta meta;
  /// The first target_counts[f] points of frame f belong to the target.
  std::vector<std::size_t> target_counts;
};

/// Target and distractor points are sampled on box surfaces (top and sides)
/// with per-axis Gaussian jitter truncated at 3 sigma, so every target point
/// lies inside its ground-truth box inflated by 3 sigma.
SyntheticSequence generate_synthetic(const SyntheticSceneConfig& cfg, int num_frames);

/// `count` sequences named seq_000000... Each draws its own seed from
/// `base_seed`, its point budget within cfg.points_range and its distractor
/// count in [0, cfg.distractors].
std::vector<SequenceRecord> generate_dataset(const SyntheticSceneConfig& cfg, int count,
                                             int num_frames, std::uint64_t base_seed);

// --- Native sequence directories ------------------------------------------------

/// `<dir>/<name>/velodyne/NNNNNN.bin`, `<dir>/<name>/gt.txt` with lines
/// "frame x y z w h l yaw", and `<dir>/<name>/meta.json`.
void write_sequence_dir(const std::string& dir, const SequenceRecord& rec);
SequenceRecord read_sequence_dir(const std::string& seq_dir);
/// Every sequence directory under `dir`, sorted by name.
std::vector<SequenceRecord> read_dataset(const std::string& dir);

std::string format_box_line(int frame, const Box3D& box);
/// Parses "frame x y z w h l yaw [extra...]"; returns the frame index.
int parse_box_line(const std::string& line, Box3D* box, std::vector<std::string>* extra = nullptr);

}  // namespace voxtrack
