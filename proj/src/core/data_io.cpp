// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/data_io.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>

#include "core/error.hpp"

namespace voxtrack {

namespace fs = std::filesystem;

namespace {

static_assert(sizeof(float) == 4, "velodyne records need 32-bit floats");

float to_le(float v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  u = __builtin_bswap32(u);
  std::memcpy(&v, &u, 4);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

using Mat4 = Eigen::Matrix4d;

std::array<double, 16> to_array(const Mat4& m) {
  std::array<double, 16> a{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a[static_cast<std::size_t>(r * 4 + c)] = m(r, c);
  return a;
}

Vec3 apply(const std::array<double, 16>& m, Vec3 p, double w) {
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3] * w,
          m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7] * w,
          m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11] * w};
}

void check_orthonormal(const Eigen::Matrix3d& r, const std::string& what) {
  const double err = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-6) {
    throw FormatError(what + " rotation is not orthonormal (max |RR^T - I| = " +
                      std::to_string(err) + ")");
  }
}

double uniform(std::mt19937_64& rng, const std::array<double, 2>& r) {
  if (r[0] == r[1]) return r[0];
  return std::uniform_real_distribution<double>(r[0], r[1])(rng);
}

double truncated_normal(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  for (;;) {
    const double v = n(rng);
    if (std::abs(v) <= 3.0 * sigma) return v;
  }
}

struct MovingBox {
  BoxSize size;
  Vec3 center;
  double yaw = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
  std::vector<Vec3> surface;  // box-local template

  Box3D box() const { return Box3D(center, size, yaw); }
  void advance() {
    yaw = normalize_yaw(yaw + yaw_rate);
    center.x += speed * std::cos(yaw);
    center.y += speed * std::sin(yaw);
  }
};

// Top face and four sides, area-weighted; LiDAR does not see the underside.
std::vector<Vec3> sample_surface(const BoxSize& s, int n, std::mt19937_64& rng) {
  const double top = s.l * s.w, front = s.w * s.h, side = s.l * s.h;
  std::discrete_distribution<int> face({top, front, front, side, side});
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int f = face(rng);
    const double a = u(rng), b = u(rng);
    switch (f) {
      case 0: pts.push_back({a * s.l, b * s.w, 0.5 * s.h}); break;
      case 1: pts.push_back({0.5 * s.l, a * s.w, b * s.h}); break;
      case 2: pts.push_back({-0.5 * s.l, a * s.w, b * s.h}); break;
      case 3: pts.push_back({a * s.l, 0.5 * s.w, b * s.h}); break;
      default: pts.push_back({a * s.l, -0.5 * s.w, b * s.h}); break;
    }
  }
  return pts;
}

MovingBox make_object(const SyntheticSceneConfig& cfg, int n_points, double ground_z,
                      std::mt19937_64& rng) {
  MovingBox m;
  m.size = {uniform(rng, cfg.width_range), uniform(rng, cfg.height_range),
            uniform(rng, cfg.length_range)};
  m.center.z = ground_z + 0.5 * m.size.h;
  m.yaw = normalize_yaw(std::uniform_real_distribution<double>(-kPi, kPi)(rng));
  m.speed = uniform(rng, cfg.speed_range);
  m.yaw_rate = uniform(rng, {-cfg.max_yaw_rate, cfg.max_yaw_rate});
  m.surface = sample_surface(m.size, n_points, rng);
  return m;
}

// Appends the visible part of `obj` for one frame; returns the count emitted.
std::size_t emit(const MovingBox& obj, const SyntheticSceneConfig& cfg, std::mt19937_64& rng,
                 PointCloud& out) {
  std::bernoulli_distribution drop(cfg.dropout);
  const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
  std::size_t n = 0;
  for (const Vec3& q : obj.surface) {
    if (drop(rng)) continue;
    const Vec3 j{q.x + truncated_normal(rng, cfg.jitter_sigma),
                 q.y + truncated_normal(rng, cfg.jitter_sigma),
                 q.z + truncated_normal(rng, cfg.jitter_sigma)};
    out.push_back({obj.center.x + c * j.x - s * j.y, obj.center.y + s * j.x + c * j.y,
                   obj.center.z + j.z});
    ++n;
  }
  return n;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string frame_file(int f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.bin", f);
  return buf;
}

}  // namespace

// --- velodyne ---------------------------------------------------------------

PointCloud read_velodyne(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of 16-byte records");
  }
  const std::size_t n = bytes.size() / 16;
  std::vector<Vec3> pts(n);
  std::vector<double> inten(n);
  for (std::size_t i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, bytes.data() + 16 * i, 16);
    for (float& v : rec) v = to_le(v);
    pts[i] = {rec[0], rec[1], rec[2]};
    inten[i] = rec[3];
  }
  try {
    return PointCloud(std::move(pts), std::move(inten));
  } catch (const InvalidArgument& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_velodyne(const std::string& path, const PointCloud& cloud) {
  std::string bytes(cloud.size() * 16, '\0');
  const auto& inten = cloud.intensity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points()[i];
    float rec[4] = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z),
                    inten ? static_cast<float>((*inten)[i]) : 0.0f};
    for (float& v : rec) v = to_le(v);
    std::memcpy(bytes.data() + 16 * i, rec, 16);
  }
  write_file(path, bytes);
}

// --- KITTI ------------------------------------------------------------------

Vec3 KittiCalib::to_camera(Vec3 p) const { return apply(velo_to_cam, p, 1.0); }
Vec3 KittiCalib::to_lidar(Vec3 p) const { return apply(cam_to_velo, p, 1.0); }

KittiCalib read_kitti_calib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing calibration file " + path);
  std::map<std::string, std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key.back() == ':') key.pop_back();
    std::vector<double> vals;
    for (double v; ls >> v;) vals.push_back(v);
    rows[key] = std::move(vals);
  }
  auto find = [&](std::initializer_list<const char*> keys, std::size_t n) {
    for (const char* k : keys) {
      auto it = rows.find(k);
      if (it == rows.end()) continue;
      if (it->second.size() != n) {
        throw FormatError(path + ": " + k + " needs " + std::to_string(n) + " values");
      }
      return it->second;
    }
    throw FormatError(path + ": missing " + std::string(*keys.begin()));
  };
  const auto rect = find({"R_rect", "R0_rect"}, 9);
  const auto tr = find({"Tr_velo_cam", "Tr_velo_to_cam"}, 12);

  Mat4 r = Mat4::Identity();
  Mat4 t = Mat4::Identity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = rect[static_cast<std::size_t>(3 * i + j)];
    for (int j = 0; j < 4; ++j) t(i, j) = tr[static_cast<std::size_t>(4 * i + j)];
  }
  check_orthonormal(r.topLeftCorner<3, 3>(), path + ": R_rect");
  check_orthonormal(t.topLeftCorner<3, 3>(), path + ": Tr_velo_cam");
  const Mat4 fwd = r * t;
  KittiCalib calib;
  calib.velo_to_cam = to_array(fwd);
  calib.cam_to_velo = to_array(fwd.inverse());
  return calib;
}

std::vector<KittiLabel> read_kitti_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file " + path);
  std::vector<KittiLabel> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    KittiLabel lb;
    double truncated, occluded, alpha, bbox[4];
    if (!(ls >> lb.frame)) continue;
    if (!(ls >> lb.track_id >> lb.type >> truncated >> occluded >> alpha >> bbox[0] >> bbox[1] >>
          bbox[2] >> bbox[3] >> lb.h >> lb.w >> lb.l >> lb.x >> lb.y >> lb.z >> lb.rotation_y)) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": malformed label record");
    }
    out.push_back(std::move(lb));
  }
  return out;
}

Box3D label_to_lidar_box(const KittiLabel& label, const KittiCalib& calib) {
  // Camera y points down; the label location is the bottom-face center.
  const Vec3 center = calib.to_lidar({label.x, label.y - 0.5 * label.h, label.z});
  const Vec3 heading = apply(calib.cam_to_velo,
                             {std::cos(label.rotation_y), 0.0, -std::sin(label.rotation_y)}, 0.0);
  return Box3D(center, {label.w, label.h, label.l}, std::atan2(heading.y, heading.x));
}

std::vector<SequenceRecord> kitti_to_tracklets(const std::string& root, const std::string& sequence,
                                               const std::string& category,
                                               const KittiLoadOptions& opts) {
  const fs::path base(root);
  const KittiCalib calib = read_kitti_calib((base / "calib" / (sequence + ".txt")).string());
  const auto labels = read_kitti_labels((base / "label_02" / (sequence + ".txt")).string());

  std::map<int, std::vector<KittiLabel>> tracks;
  std::map<int, int> same_kind_per_frame;
  for (const auto& lb : labels) {
    if (lb.type != category || lb.track_id < 0) continue;
    tracks[lb.track_id].push_back(lb);
    ++same_kind_per_frame[lb.frame];
  }

  std::vector<SequenceRecord> out;
  for (auto& [tid, ls] : tracks) {
    std::sort(ls.begin(), ls.end(),
              [](const KittiLabel& a, const KittiLabel& b) { return a.frame < b.frame; });
    std::size_t start = 0;
    while (start < ls.size()) {
      std::size_t end = start + 1;
      while (end < ls.size() && ls[end].frame == ls[end - 1].frame + 1) ++end;
      if (end - start >= 2) {
        SequenceRecord rec;
        char name[64];
        std::snprintf(name, sizeof(name), "%s_t%04d_f%06d", sequence.c_str(), tid,
                      ls[start].frame);
        rec.name = name;
        rec.seq.category = category;
        for (std::size_t i = start; i < end; ++i) {
          const Box3D box = label_to_lidar_box(ls[i], calib);
          const auto path = base / "velodyne" / sequence / frame_file(ls[i].frame);
          PointCloud raw = read_velodyne(path.string());
          PointCloud kept;
          for (std::size_t p = 0; p < raw.size(); ++p) {
            const Vec3& q = raw.points()[p];
            const double dx = q.x - box.center().x, dy = q.y - box.center().y;
            if (opts.keep_radius > 0.0 && dx * dx + dy * dy > opts.keep_radius * opts.keep_radius) {
              continue;
            }
            kept.push_back(q, (*raw.intensity())[p]);
          }
          if (i == start) {
            int inside = 0;
            for (const Vec3& q : kept.points()) inside += box.contains(q) ? 1 : 0;
            rec.meta.first_frame_points = inside;
            rec.meta.distractors = same_kind_per_frame[ls[i].frame] - 1;
          }
          rec.seq.frames.push_back(std::move(kept));
          rec.seq.gt_boxes.push_back(box);
        }
        out.push_back(std::move(rec));
      }
      start = end;
    }
  }
  return out;
}

// --- synthetic --------------------------------------------------------------

void SyntheticSceneConfig::validate() const {
  auto range = [](const std::array<double, 2>& r, const char* what, bool strictly_positive) {
    if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || r[0] > r[1] ||
        (strictly_positive ? !(r[0] > 0.0) : r[0] < 0.0)) {
      throw ConfigError(std::string("synthetic ") + what + " range is invalid");
    }
  };
  range(width_range, "width", true);
  range(height_range, "height", true);
  range(length_range, "length", true);
  range(speed_range, "speed", false);
  if (!(max_yaw_rate >= 0.0) || max_yaw_rate > kPi) throw ConfigError("max_yaw_rate must be in [0, pi]");
  if (points_range[0] < 0 || points_range[0] > points_range[1]) {
    throw ConfigError("synthetic points range is invalid");
  }
  if (!(dropout >= 0.0 && dropout <= 1.0)) throw ConfigError("dropout must be in [0, 1]");
  if (!(clutter_density >= 0.0) || !std::isfinite(clutter_density)) {
    throw ConfigError("clutter_density must be non-negative");
  }
  if (!(clutter_radius >= 0.0) || !std::isfinite(clutter_radius)) {
    throw ConfigError("clutter_radius must be non-negative");
  }
  if (distractors < 0) throw ConfigError("distractors must be non-negative");
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) {
    throw ConfigError("jitter_sigma must be non-negative");
  }
}

SyntheticSequence generate_synthetic(const SyntheticSceneConfig& cfg, int num_frames) {
  cfg.validate();
  if (num_frames < 2) throw InvalidArgument("synthetic sequences need at least 2 frames");
  constexpr double kGroundZ = -1.7;
  std::mt19937_64 rng(cfg.seed);

  const int n_points = std::uniform_int_distribution<int>(cfg.points_range[0],
                                                          cfg.points_range[1])(rng);
  MovingBox target = make_object(cfg, n_points, kGroundZ, rng);
  target.center.x = std::uniform_real_distribution<double>(5.0, 25.0)(rng);
  target.center.y = std::uniform_real_distribution<double>(-8.0, 8.0)(rng);

  std::vector<MovingBox> distractors;
  for (int d = 0; d < cfg.distractors; ++d) {
    MovingBox m = make_object(cfg, n_points, kGroundZ, rng);
    const double r = std::uniform_real_distribution<double>(4.0, 10.0)(rng);
    const double a = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
    m.center.x = target.center.x + r * std::cos(a);
    m.center.y = target.center.y + r * std::sin(a);
    distractors.push_back(std::move(m));
  }

  // Ground-truth trajectory first, so the static ground covers all of it.
  std::vector<MovingBox> states;
  {
    MovingBox t = target;
    for (int f = 0; f < num_frames; ++f) {
      states.push_back(t);
      t.advance();
    }
  }
  double lo_x = states[0].center.x, hi_x = lo_x, lo_y = states[0].center.y, hi_y = lo_y;
  for (const auto& s : states) {
    lo_x = std::min(lo_x, s.center.x);
    hi_x = std::max(hi_x, s.center.x);
    lo_y = std::min(lo_y, s.center.y);
    hi_y = std::max(hi_y, s.center.y);
  }
  lo_x -= cfg.clutter_radius;
  hi_x += cfg.clutter_radius;
  lo_y -= cfg.clutter_radius;
  hi_y += cfg.clutter_radius;
  std::vector<Vec3> ground;
  const double area = (hi_x - lo_x) * (hi_y - lo_y);
  const auto n_ground = static_cast<std::size_t>(std::llround(cfg.clutter_density * area));
  if (n_ground > 0) {
    std::uniform_real_distribution<double> ux(lo_x, hi_x), uy(lo_y, hi_y);
    for (std::size_t i = 0; i < n_ground; ++i) {
      const double x = ux(rng), y = uy(rng);
      ground.push_back({x, y, kGroundZ + truncated_normal(rng, cfg.jitter_sigma)});
    }
  }

  SyntheticSequence out;
  out.seq.category = "Car";
  for (int f = 0; f < num_frames; ++f) {
    const MovingBox& t = states[static_cast<std::size_t>(f)];
    PointCloud cloud;
    out.target_counts.push_back(emit(t, cfg, rng, cloud));
    for (auto& d : distractors) {
      emit(d, cfg, rng, cloud);
      d.advance();
    }
    for (const Vec3& g : ground) cloud.push_back(g);
    out.seq.frames.push_back(std::move(cloud));
    out.seq.gt_boxes.push_back(t.box());
  }
  out.meta.first_frame_points = static_cast<int>(out.target_counts[0]);
  out.meta.distractors = cfg.distractors;
  return out;
}

std::vector<SequenceRecord> generate_dataset(const SyntheticSceneConfig& cfg, int count,
                                             int num_frames, std::uint64_t base_seed) {
  cfg.validate();
  if (count < 0) throw InvalidArgument("sequence count must be non-negative");
  std::vector<SequenceRecord> out;
  for (int i = 0; i < count; ++i) {
    SyntheticSceneConfig c = cfg;
    c.seed = splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(i)));
    std::mt19937_64 rng(c.seed);
    c.distractors = std::uniform_int_distribution<int>(0, cfg.distractors)(rng);
    c.seed = rng();
    auto gen = generate_synthetic(c, num_frames);
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%06d", i);
    out.push_back({name, std::move(gen.seq), gen.meta});
  }
  return out;
}

// --- native sequence directories -------------------------------------------------

std::string format_box_line(int frame, const Box3D& b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g", frame,
                b.center().x, b.center().y, b.center().z, b.size().w, b.size().h, b.size().l,
                b.yaw());
  return buf;
}

int parse_box_line(const std::string& line, Box3D* box, std::vector<std::string>* extra) {
  std::istringstream ls(line);
  int frame;
  double x, y, z, w, h, l, yaw;
  if (!(ls >> frame >> x >> y >> z >> w >> h >> l >> yaw)) {
    throw FormatError("malformed box line: '" + line + "'");
  }
  try {
    *box = Box3D({x, y, z}, {w, h, l}, yaw);
  } catch (const InvalidArgument& e) {
    throw FormatError("invalid box line '" + line + "': " + e.what());
  }
  if (extra) {
    extra->clear();
    for (std::string tok; ls >> tok;) extra->push_back(tok);
  }
  return frame;
}

void write_sequence_dir(const std::string& dir, const SequenceRecord& rec) {
  rec.seq.validate();
  const fs::path root = fs::path(dir) / rec.name;
  std::error_code ec;
  fs::create_directories(root / "velodyne", ec);
  if (ec) throw IoError("cannot create " + (root / "velodyne").string() + ": " + ec.message());
  std::string gt;
  for (std::size_t f = 0; f < rec.seq.frames.size(); ++f) {
    write_velodyne((root / "velodyne" / frame_file(static_cast<int>(f))).string(),
                   rec.seq.frames[f]);
    gt += format_box_line(static_cast<int>(f), rec.seq.gt_boxes[f]) + "\n";
  }
  write_file((root / "gt.txt").string(), gt);
  nlohmann::ordered_json meta;
  meta["category"] = rec.seq.category;
  meta["frames"] = rec.seq.frames.size();
  meta["first_frame_points"] = rec.meta.first_frame_points
                                   ? nlohmann::ordered_json(*rec.meta.first_frame_points)
                                   : nlohmann::ordered_json();
  meta["distractors"] = rec.meta.distractors ? nlohmann::ordered_json(*rec.meta.distractors)
                                             : nlohmann::ordered_json();
  write_file((root / "meta.json").string(), meta.dump(2) + "\n");
}

SequenceRecord read_sequence_dir(const std::string& seq_dir) {
  const fs::path root(seq_dir);
  SequenceRecord rec;
  rec.name = root.filename().string();
  if (rec.name.empty()) rec.name = root.parent_path().filename().string();

  std::istringstream gt(read_file((root / "gt.txt").string()));
  std::string line;
  int expect = 0;
  while (std::getline(gt, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Box3D box;
    const int f = parse_box_line(line, &box);
    if (f != expect) throw FormatError(seq_dir + "/gt.txt: frames must be 0, 1, 2, ...");
    ++expect;
    rec.seq.gt_boxes.push_back(box);
    rec.seq.frames.push_back(read_velodyne((root / "velodyne" / frame_file(f)).string()));
  }
  rec.seq.category = "Car";
  const fs::path meta_path = root / "meta.json";
  if (fs::exists(meta_path)) {
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(read_file(meta_path.string()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(meta_path.string() + ": " + e.what());
    }
    if (meta.contains("category") && meta["category"].is_string()) {
      rec.seq.category = meta["category"].get<std::string>();
    }
    if (meta.contains("first_frame_points") && meta["first_frame_points"].is_number_integer()) {
      rec.meta.first_frame_points = meta["first_frame_points"].get<int>();
    }
    if (meta.contains("distractors") && meta["distractors"].is_number_integer()) {
      rec.meta.distractors = meta["distractors"].get<int>();
    }
  }
  try {
    rec.seq.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(seq_dir + ": " + e.what());
  }
  return rec;
}

std::vector<SequenceRecord> read_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "gt.txt")) names.push_back(e.path().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<SequenceRecord> out;
  for (const auto& n : names) out.push_back(read_sequence_dir(n));
  return out;
}

}  // namespace voxtrack
