// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/voxelization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "core/error.hpp"

namespace voxtrack {

int cells_for_span(double span, double edge) {
  const double q = span / edge;
  const double r = std::round(q);
  const double cells = std::abs(q - r) < 1e-9 ? r : std::ceil(q);
  return static_cast<int>(cells);
}

GridDims ceil_div(const GridDims& dims, int factor) {
  return {(dims[0] + factor - 1) / factor, (dims[1] + factor - 1) / factor,
          (dims[2] + factor - 1) / factor};
}

void VoxelizerConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!(voxel_size[a] > 0.0) || !std::isfinite(voxel_size[a])) {
      throw ConfigError("voxel size must be positive and finite");
    }
    if (!(extent_max[a] > extent_min[a])) throw ConfigError("voxel extent max must exceed min");
  }
  if (!(scale_ratio > 1.0)) throw ConfigError("scale ratio must be greater than 1");
  for (int d : dims()) {
    if (d < 1) throw ConfigError("voxel grid must have at least one cell per axis");
  }
}

GridDims VoxelizerConfig::dims() const {
  GridDims d{};
  for (int a = 0; a < 3; ++a) d[a] = cells_for_span(extent_max[a] - extent_min[a], voxel_size[a]);
  return d;
}

VoxelizerConfig VoxelizerConfig::large() const {
  VoxelizerConfig out = *this;
  for (auto& s : out.voxel_size) s *= scale_ratio;
  return out;
}

std::int64_t VoxelGrid::total_points() const {
  return std::accumulate(point_counts.begin(), point_counts.end(), std::int64_t{0});
}

bool voxel_index(const Vec3& p, const std::array<double, 3>& extent_min,
                 const std::array<double, 3>& voxel_size, const GridDims& dims, VoxelCoord* out) {
  const double fi = std::floor((p.x - extent_min[0]) / voxel_size[0]);
  const double fj = std::floor((p.y - extent_min[1]) / voxel_size[1]);
  const double fk = std::floor((p.z - extent_min[2]) / voxel_size[2]);
  if (fi < 0 || fj < 0 || fk < 0 || fi >= dims[0] || fj >= dims[1] || fk >= dims[2]) return false;
  *out = {static_cast<std::int32_t>(fi), static_cast<std::int32_t>(fj),
          static_cast<std::int32_t>(fk)};
  return true;
}

VoxelGrid voxelize(const PointCloud& cloud, const VoxelizerConfig& cfg) {
  cfg.validate();
  VoxelGrid grid;
  grid.dims = cfg.dims();
  grid.channels = 3;

  struct Binned {
    VoxelCoord coord;
    Vec3 p;
  };
  std::vector<Binned> binned;
  binned.reserve(cloud.size());
  for (const auto& p : cloud.points()) {
    VoxelCoord c;
    if (voxel_index(p, cfg.extent_min, cfg.voxel_size, grid.dims, &c)) {
      binned.push_back({c, p});
    } else {
      ++grid.dropped_points;
    }
  }
  // Sorting by coordinate and then by value fixes the reduction order, which
  // makes every downstream sum independent of the input point order.
  std::sort(binned.begin(), binned.end(), [](const Binned& a, const Binned& b) {
    if (a.coord != b.coord) return a.coord < b.coord;
    return std::tie(a.p.x, a.p.y, a.p.z) < std::tie(b.p.x, b.p.y, b.p.z);
  });

  grid.point_values.reserve(binned.size() * 3);
  grid.point_rows.reserve(binned.size());
  for (const auto& b : binned) {
    if (grid.coords.empty() || grid.coords.back() != b.coord) {
      grid.coords.push_back(b.coord);
      grid.point_counts.push_back(0);
    }
    ++grid.point_counts.back();
    grid.point_rows.push_back(grid.coords.size() - 1);
    grid.point_values.insert(grid.point_values.end(), {b.p.x, b.p.y, b.p.z});
  }
  return grid;
}

VoxelGrid encode_dynamic(const VoxelGrid& grid) {
  if (grid.point_rows.size() * grid.channels != grid.point_values.size()) {
    throw InvalidArgument("encode_dynamic needs a grid with retained per-point channels");
  }
  VoxelGrid out = grid;
  const std::size_t c = grid.channels;
  out.features.assign(grid.size() * c, 0.0);
  for (std::size_t p = 0; p < grid.point_rows.size(); ++p) {
    double* f = out.features.data() + grid.point_rows[p] * c;
    for (std::size_t ch = 0; ch < c; ++ch) f[ch] += grid.point_values[p * c + ch];
  }
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const double n = static_cast<double>(grid.point_counts[r]);
    for (std::size_t ch = 0; ch < c; ++ch) out.features[r * c + ch] /= n;
  }
  // Every point now carries its voxel mean; none are removed.
  for (std::size_t p = 0; p < grid.point_rows.size(); ++p) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      out.point_values[p * c + ch] = out.features[grid.point_rows[p] * c + ch];
    }
  }
  return out;
}

VoxelGrid fuse_frames(const VoxelGrid& prev, const VoxelGrid& cur) {
  if (prev.dims != cur.dims) throw ShapeError("cannot fuse voxel grids of different dimensions");
  if (!prev.has_features() || !cur.has_features()) {
    throw InvalidArgument("fuse_frames expects encoded grids");
  }
  VoxelGrid out;
  out.dims = prev.dims;
  out.channels = prev.channels + cur.channels;
  out.dropped_points = prev.dropped_points + cur.dropped_points;
  out.coords.reserve(prev.size() + cur.size());
  out.features.reserve((prev.size() + cur.size()) * out.channels);

  std::size_t a = 0, b = 0;
  while (a < prev.size() || b < cur.size()) {
    const bool take_a = a < prev.size() && (b >= cur.size() || prev.coords[a] <= cur.coords[b]);
    const bool take_b = b < cur.size() && (a >= prev.size() || cur.coords[b] <= prev.coords[a]);
    out.coords.push_back(take_a ? prev.coords[a] : cur.coords[b]);
    std::int64_t count = 0;
    if (take_a) {
      out.features.insert(out.features.end(), prev.feature(a), prev.feature(a) + prev.channels);
      count += prev.point_counts[a];
    } else {
      out.features.insert(out.features.end(), prev.channels, 0.0);
    }
    if (take_b) {
      out.features.insert(out.features.end(), cur.feature(b), cur.feature(b) + cur.channels);
      count += cur.point_counts[b];
    } else {
      out.features.insert(out.features.end(), cur.channels, 0.0);
    }
    out.point_counts.push_back(count);
    if (take_a) ++a;
    if (take_b) ++b;
  }
  return out;
}

DualVoxelGrids dual_voxelize(const PointCloud& prev, const PointCloud& cur,
                             const VoxelizerConfig& cfg) {
  cfg.validate();
  const VoxelizerConfig large = cfg.large();
  auto build = [&](const VoxelizerConfig& c) {
    return fuse_frames(encode_dynamic(voxelize(prev, c)), encode_dynamic(voxelize(cur, c)));
  };
  return {build(large), build(cfg)};
}

}  // namespace voxtrack
