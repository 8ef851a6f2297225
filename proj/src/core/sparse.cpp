// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/sparse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "core/error.hpp"

namespace voxtrack {

namespace {

std::string dims_str(const GridDims& d) {
  return "(" + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) + ")";
}

using Pairs = std::vector<std::pair<std::int32_t, std::int32_t>>;

}  // namespace

SparseTensor3D::SparseTensor3D(GridDims dims, std::size_t channels, std::vector<VoxelCoord> coords,
                               ad::Tensor features)
    : dims_(dims), channels_(channels), features_(std::move(features)) {
  for (int d : dims_) {
    if (d < 1) throw ShapeError("sparse tensor dims must be positive: " + dims_str(dims_));
  }
  if (!features_.defined() || features_.shape() != ad::Shape{coords.size(), channels}) {
    throw ShapeError("sparse features must be (" + std::to_string(coords.size()) + " x " +
                     std::to_string(channels) + ")");
  }
  auto index = std::make_shared<std::unordered_map<std::int64_t, std::int32_t>>();
  index->reserve(coords.size() * 2);
  for (std::size_t r = 0; r < coords.size(); ++r) {
    if (!in_bounds(coords[r])) throw ShapeError("sparse coordinate outside " + dims_str(dims_));
    if (r > 0 && !(coords[r - 1] < coords[r])) {
      throw ShapeError("sparse coordinates must be sorted and unique");
    }
    index->emplace(key(coords[r]), static_cast<std::int32_t>(r));
  }
  coords_ = std::make_shared<const std::vector<VoxelCoord>>(std::move(coords));
  index_ = std::move(index);
}

SparseTensor3D SparseTensor3D::empty(GridDims dims, std::size_t channels) {
  return SparseTensor3D(dims, channels, {}, ad::Tensor::zeros({0, channels}));
}

SparseTensor3D SparseTensor3D::from_grid(const VoxelGrid& grid) {
  if (!grid.has_features()) throw InvalidArgument("voxel grid has no encoded features");
  return SparseTensor3D(grid.dims, grid.channels, grid.coords,
                        ad::Tensor::constant({grid.size(), grid.channels}, grid.features));
}

bool SparseTensor3D::in_bounds(const VoxelCoord& c) const {
  return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < dims_[0] && c.j < dims_[1] && c.k < dims_[2];
}

std::int64_t SparseTensor3D::key(const VoxelCoord& c) const {
  return (static_cast<std::int64_t>(c.i) * dims_[1] + c.j) * dims_[2] + c.k;
}

std::int64_t SparseTensor3D::find(const VoxelCoord& c) const {
  if (!in_bounds(c)) return -1;
  auto it = index_->find(key(c));
  return it == index_->end() ? -1 : it->second;
}

SparseTensor3D SparseTensor3D::with_features(ad::Tensor features) const {
  if (features.shape().size() != 2 || features.shape()[0] != size()) {
    throw ShapeError("replacement features do not match occupancy");
  }
  SparseTensor3D out = *this;
  out.channels_ = features.shape()[1];
  out.features_ = std::move(features);
  return out;
}

void ConvSpec::validate() const {
  if (in_channels == 0 || out_channels == 0) throw ConfigError("conv channels must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("conv kernel edge must be odd");
  if (stride != 1 && stride != 2) throw ConfigError("conv stride must be 1 or 2");
  if (mode == ConvMode::kSubmanifold && stride != 1) {
    throw ConfigError("submanifold convolution requires stride 1");
  }
}

SparseTensor3D sparse_conv(const SparseTensor3D& x, const ConvSpec& spec, const ad::Tensor& weights,
                           const ad::Tensor& bias) {
  spec.validate();
  if (x.channels() != spec.in_channels) {
    throw ShapeError("sparse_conv: input has " + std::to_string(x.channels()) +
                     " channels, spec expects " + std::to_string(spec.in_channels));
  }
  const std::size_t kv = spec.kernel_volume();
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  if (weights.shape() != ad::Shape{kv, cin, cout}) {
    throw ShapeError("sparse_conv: weights must be " + ad::shape_str({kv, cin, cout}) + ", got " +
                     ad::shape_str(weights.shape()));
  }
  if (bias.shape() != ad::Shape{cout}) throw ShapeError("sparse_conv: bias must be (out)");

  const int k = spec.kernel, pad = spec.padding(), s = spec.stride;
  auto rules = std::make_shared<std::vector<Pairs>>(kv);
  std::vector<VoxelCoord> out_coords;
  GridDims out_dims = x.dims();

  if (spec.mode == ConvMode::kSubmanifold || spec.stride == 1) {
    // Stride-1 strided mode dilates occupancy; submanifold keeps it fixed.
    if (spec.mode == ConvMode::kSubmanifold) {
      out_coords = x.coords();
    } else {
      std::vector<VoxelCoord> cand;
      for (const auto& q : x.coords())
        for (int dx = 0; dx < k; ++dx)
          for (int dy = 0; dy < k; ++dy)
            for (int dz = 0; dz < k; ++dz) {
              const VoxelCoord p{q.i + pad - dx, q.j + pad - dy, q.k + pad - dz};
              if (p.i >= 0 && p.j >= 0 && p.k >= 0 && p.i < out_dims[0] && p.j < out_dims[1] &&
                  p.k < out_dims[2])
                cand.push_back(p);
            }
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      out_coords = std::move(cand);
    }
    for (std::size_t r = 0; r < out_coords.size(); ++r) {
      const auto& p = out_coords[r];
      for (int dx = 0; dx < k; ++dx)
        for (int dy = 0; dy < k; ++dy)
          for (int dz = 0; dz < k; ++dz) {
            const auto in_row = x.find({p.i + dx - pad, p.j + dy - pad, p.k + dz - pad});
            if (in_row >= 0) {
              (*rules)[(dx * k + dy) * k + dz].emplace_back(static_cast<std::int32_t>(in_row),
                                                            static_cast<std::int32_t>(r));
            }
          }
    }
  } else {
    out_dims = ceil_div(x.dims(), s);
    struct Hit {
      VoxelCoord p;
      std::int32_t offset;
      std::int32_t in_row;
    };
    std::vector<Hit> hits;
    std::array<std::vector<std::pair<int, int>>, 3> axis;  // (d, p) per axis
    for (std::size_t r = 0; r < x.size(); ++r) {
      const auto& q = x.coords()[r];
      const std::array<int, 3> qa{q.i, q.j, q.k};
      for (int a = 0; a < 3; ++a) {
        axis[a].clear();
        for (int d = 0; d < k; ++d) {
          const int num = qa[a] + pad - d;
          if (num < 0 || num % s != 0) continue;
          const int p = num / s;
          if (p < out_dims[a]) axis[a].emplace_back(d, p);
        }
      }
      for (const auto& [dx, px] : axis[0])
        for (const auto& [dy, py] : axis[1])
          for (const auto& [dz, pz] : axis[2])
            hits.push_back({{px, py, pz}, (dx * k + dy) * k + dz, static_cast<std::int32_t>(r)});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      if (a.p != b.p) return a.p < b.p;
      if (a.offset != b.offset) return a.offset < b.offset;
      return a.in_row < b.in_row;
    });
    for (const auto& h : hits) {
      if (out_coords.empty() || out_coords.back() != h.p) out_coords.push_back(h.p);
      (*rules)[h.offset].emplace_back(h.in_row, static_cast<std::int32_t>(out_coords.size() - 1));
    }
  }

  const std::size_t n_out = out_coords.size();
  std::vector<double> out(n_out * cout, 0.0);
  const auto in = x.features().values();
  const auto w = weights.values();
  for (std::size_t d = 0; d < kv; ++d) {
    const double* wd = w.data() + d * cin * cout;
    for (const auto& [i, o] : (*rules)[d]) {
      const double* xi = in.data() + static_cast<std::size_t>(i) * cin;
      double* yo = out.data() + static_cast<std::size_t>(o) * cout;
      for (std::size_t a = 0; a < cin; ++a) {
        const double xa = xi[a];
        const double* wr = wd + a * cout;
        for (std::size_t b = 0; b < cout; ++b) yo[b] += xa * wr[b];
      }
    }
  }
  const auto bv = bias.values();
  for (std::size_t r = 0; r < n_out; ++r)
    for (std::size_t b = 0; b < cout; ++b) out[r * cout + b] += bv[b];

  ad::Tensor feats = ad::make_op(
      {n_out, cout}, std::move(out), {x.features(), weights, bias},
      [rules, cin, cout, kv](const std::vector<ad::Node*>& ps) {
        return [rules, cin, cout, kv, px = ps[0], pw = ps[1], pb = ps[2]](
                   std::span<const double> g) {
          double* gx = ad::grad_buffer(px);
          double* gw = ad::grad_buffer(pw);
          double* gb = ad::grad_buffer(pb);
          const double* xv = px->value.data();
          const double* wv = pw->value.data();
          for (std::size_t d = 0; d < kv; ++d) {
            const double* wd = wv + d * cin * cout;
            double* gwd = gw ? gw + d * cin * cout : nullptr;
            for (const auto& [i, o] : (*rules)[d]) {
              const double* go = g.data() + static_cast<std::size_t>(o) * cout;
              const std::size_t ib = static_cast<std::size_t>(i) * cin;
              for (std::size_t a = 0; a < cin; ++a) {
                const double* wr = wd + a * cout;
                if (gx) {
                  double acc = 0.0;
                  for (std::size_t b = 0; b < cout; ++b) acc += wr[b] * go[b];
                  gx[ib + a] += acc;
                }
                if (gwd) {
                  const double xa = xv[ib + a];
                  double* gr = gwd + a * cout;
                  for (std::size_t b = 0; b < cout; ++b) gr[b] += xa * go[b];
                }
              }
            }
          }
          if (gb) {
            const std::size_t rows = g.size() / cout;
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t b = 0; b < cout; ++b) gb[b] += g[r * cout + b];
          }
        };
      });
  return SparseTensor3D(out_dims, cout, std::move(out_coords), std::move(feats));
}

namespace {

// Members of each pooling block: (output coordinate, input row) sorted so
// rows within a block appear in ascending (sorted-coordinate) order.
struct PoolPlan {
  GridDims dims;
  std::vector<VoxelCoord> coords;
  std::vector<std::size_t> begin;  // size coords + 1, into rows
  std::vector<std::int32_t> rows;
};

PoolPlan plan_pool(const SparseTensor3D& x, int factor) {
  if (factor < 1) throw InvalidArgument("pool factor must be positive");
  PoolPlan plan;
  plan.dims = ceil_div(x.dims(), factor);
  std::vector<std::pair<VoxelCoord, std::int32_t>> members;
  members.reserve(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) {
    const auto& c = x.coords()[r];
    members.emplace_back(VoxelCoord{c.i / factor, c.j / factor, c.k / factor},
                         static_cast<std::int32_t>(r));
  }
  std::sort(members.begin(), members.end());
  for (const auto& [c, r] : members) {
    if (plan.coords.empty() || plan.coords.back() != c) {
      plan.coords.push_back(c);
      plan.begin.push_back(plan.rows.size());
    }
    plan.rows.push_back(r);
  }
  plan.begin.push_back(plan.rows.size());
  return plan;
}

}  // namespace

SparseTensor3D avg_pool(const SparseTensor3D& x, int factor) {
  auto plan = std::make_shared<PoolPlan>(plan_pool(x, factor));
  const std::size_t c = x.channels();
  const std::size_t n = plan->coords.size();
  std::vector<double> out(n * c, 0.0);
  const auto in = x.features().values();
  for (std::size_t o = 0; o < n; ++o) {
    const double count = static_cast<double>(plan->begin[o + 1] - plan->begin[o]);
    for (std::size_t m = plan->begin[o]; m < plan->begin[o + 1]; ++m)
      for (std::size_t ch = 0; ch < c; ++ch) out[o * c + ch] += in[plan->rows[m] * c + ch];
    for (std::size_t ch = 0; ch < c; ++ch) out[o * c + ch] /= count;
  }
  ad::Tensor feats = ad::make_op({n, c}, std::move(out), {x.features()},
                                 [plan, c, n](const std::vector<ad::Node*>& ps) {
    return [plan, c, n, px = ps[0]](std::span<const double> g) {
      double* gx = ad::grad_buffer(px);
      for (std::size_t o = 0; o < n; ++o) {
        const double inv = 1.0 / static_cast<double>(plan->begin[o + 1] - plan->begin[o]);
        for (std::size_t m = plan->begin[o]; m < plan->begin[o + 1]; ++m)
          for (std::size_t ch = 0; ch < c; ++ch) gx[plan->rows[m] * c + ch] += g[o * c + ch] * inv;
      }
    };
  });
  return SparseTensor3D(plan->dims, c, plan->coords, std::move(feats));
}

SparseTensor3D max_pool(const SparseTensor3D& x, int factor) {
  const PoolPlan plan = plan_pool(x, factor);
  const std::size_t c = x.channels();
  const std::size_t n = plan.coords.size();
  std::vector<double> out(n * c, 0.0);
  auto arg = std::make_shared<std::vector<std::int32_t>>(n * c, 0);
  const auto in = x.features().values();
  for (std::size_t o = 0; o < n; ++o) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      std::int32_t best_row = plan.rows[plan.begin[o]];
      double best = in[best_row * c + ch];
      for (std::size_t m = plan.begin[o] + 1; m < plan.begin[o + 1]; ++m) {
        const double v = in[plan.rows[m] * c + ch];
        if (v > best) {
          best = v;
          best_row = plan.rows[m];
        }
      }
      out[o * c + ch] = best;
      (*arg)[o * c + ch] = best_row;
    }
  }
  ad::Tensor feats = ad::make_op({n, c}, std::move(out), {x.features()},
                                 [arg, c](const std::vector<ad::Node*>& ps) {
    return [arg, c, px = ps[0]](std::span<const double> g) {
      double* gx = ad::grad_buffer(px);
      for (std::size_t i = 0; i < g.size(); ++i) gx[(*arg)[i] * c + i % c] += g[i];
    };
  });
  return SparseTensor3D(plan.dims, c, plan.coords, std::move(feats));
}

namespace {

struct AxisTaps {
  int lo, hi;
  double w_lo, w_hi;
};

// Voxel-center aligned linear taps for fine index q at scale 1/factor,
// clamped to the coarse extent [0, coarse).
AxisTaps axis_taps(int q, int factor, int coarse) {
  double src = (q + 0.5) / factor - 0.5;
  if (src < 0.0) src = 0.0;
  int lo = static_cast<int>(std::floor(src));
  if (lo > coarse - 1) lo = coarse - 1;
  const int hi = std::min(lo + 1, coarse - 1);
  const double t = std::min(src - lo, 1.0);
  if (hi == lo) return {lo, hi, 1.0, 0.0};
  return {lo, hi, 1.0 - t, t};
}

}  // namespace

SparseTensor3D upsample_lerp(const SparseTensor3D& x, int factor, const GridDims& target_dims,
                             const std::vector<VoxelCoord>& target) {
  if (factor < 1) throw InvalidArgument("upsample factor must be positive");
  if (ceil_div(target_dims, factor) != x.dims()) {
    throw ShapeError("upsample target " + dims_str(target_dims) + " incompatible with coarse " +
                     dims_str(x.dims()) + " at factor " + std::to_string(factor));
  }
  struct Tap {
    std::int32_t out_row, in_row;
    double w;
  };
  auto taps = std::make_shared<std::vector<Tap>>();
  for (std::size_t r = 0; r < target.size(); ++r) {
    const auto& t = target[r];
    if (t.i < 0 || t.j < 0 || t.k < 0 || t.i >= target_dims[0] || t.j >= target_dims[1] ||
        t.k >= target_dims[2]) {
      throw ShapeError("upsample target coordinate out of bounds");
    }
    if (r > 0 && !(target[r - 1] < t)) throw ShapeError("upsample targets must be sorted and unique");
    const AxisTaps ax[3] = {axis_taps(t.i, factor, x.dims()[0]), axis_taps(t.j, factor, x.dims()[1]),
                            axis_taps(t.k, factor, x.dims()[2])};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const double w = (a ? ax[0].w_hi : ax[0].w_lo) * (b ? ax[1].w_hi : ax[1].w_lo) *
                           (c ? ax[2].w_hi : ax[2].w_lo);
          if (w == 0.0) continue;
          const auto row = x.find({a ? ax[0].hi : ax[0].lo, b ? ax[1].hi : ax[1].lo,
                                   c ? ax[2].hi : ax[2].lo});
          if (row >= 0) taps->push_back({static_cast<std::int32_t>(r), static_cast<std::int32_t>(row), w});
        }
  }
  const std::size_t ch = x.channels();
  std::vector<double> out(target.size() * ch, 0.0);
  const auto in = x.features().values();
  for (const auto& tp : *taps)
    for (std::size_t c = 0; c < ch; ++c) out[tp.out_row * ch + c] += tp.w * in[tp.in_row * ch + c];
  ad::Tensor feats = ad::make_op({target.size(), ch}, std::move(out), {x.features()},
                                 [taps, ch](const std::vector<ad::Node*>& ps) {
    return [taps, ch, px = ps[0]](std::span<const double> g) {
      double* gx = ad::grad_buffer(px);
      for (const auto& tp : *taps)
        for (std::size_t c = 0; c < ch; ++c) gx[tp.in_row * ch + c] += tp.w * g[tp.out_row * ch + c];
    };
  });
  return SparseTensor3D(target_dims, ch, target, std::move(feats));
}

SparseTensor3D concat_channels(const SparseTensor3D& a, const SparseTensor3D& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("concat_channels: dims " + dims_str(a.dims()) + " vs " + dims_str(b.dims()));
  }
  const std::size_t ca = a.channels(), cb = b.channels(), c = ca + cb;
  std::vector<VoxelCoord> coords;
  auto src = std::make_shared<std::vector<std::pair<std::int32_t, std::int32_t>>>();
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    const bool ta = ia < a.size() && (ib >= b.size() || a.coords()[ia] <= b.coords()[ib]);
    const bool tb = ib < b.size() && (ia >= a.size() || b.coords()[ib] <= a.coords()[ia]);
    coords.push_back(ta ? a.coords()[ia] : b.coords()[ib]);
    src->emplace_back(ta ? static_cast<std::int32_t>(ia) : -1, tb ? static_cast<std::int32_t>(ib) : -1);
    if (ta) ++ia;
    if (tb) ++ib;
  }
  std::vector<double> out(coords.size() * c, 0.0);
  const auto av = a.features().values();
  const auto bv = b.features().values();
  for (std::size_t r = 0; r < coords.size(); ++r) {
    const auto [ra, rb] = (*src)[r];
    if (ra >= 0) std::copy_n(av.data() + ra * ca, ca, out.data() + r * c);
    if (rb >= 0) std::copy_n(bv.data() + rb * cb, cb, out.data() + r * c + ca);
  }
  ad::Tensor feats = ad::make_op({coords.size(), c}, std::move(out), {a.features(), b.features()},
                                 [src, ca, cb](const std::vector<ad::Node*>& ps) {
    return [src, ca, cb, pa = ps[0], pb = ps[1]](std::span<const double> g) {
      double* ga = ad::grad_buffer(pa);
      double* gb = ad::grad_buffer(pb);
      const std::size_t c = ca + cb;
      for (std::size_t r = 0; r < src->size(); ++r) {
        const auto [ra, rb] = (*src)[r];
        if (ga && ra >= 0)
          for (std::size_t k = 0; k < ca; ++k) ga[ra * ca + k] += g[r * c + k];
        if (gb && rb >= 0)
          for (std::size_t k = 0; k < cb; ++k) gb[rb * cb + k] += g[r * c + ca + k];
      }
    };
  });
  return SparseTensor3D(a.dims(), c, std::move(coords), std::move(feats));
}

SparseTensor3D sparse_relu(const SparseTensor3D& x) { return x.with_features(ad::relu(x.features())); }

ad::Tensor densify(const SparseTensor3D& x) {
  const auto& d = x.dims();
  const std::size_t c = x.channels();
  auto offsets = std::make_shared<std::vector<std::size_t>>();
  offsets->reserve(x.size());
  for (const auto& v : x.coords()) {
    offsets->push_back(((static_cast<std::size_t>(v.i) * d[1] + v.j) * d[2] + v.k) * c);
  }
  const ad::Shape shape{static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[1]),
                        static_cast<std::size_t>(d[2]), c};
  std::vector<double> out(ad::numel(shape), 0.0);
  const auto in = x.features().values();
  for (std::size_t r = 0; r < offsets->size(); ++r) std::copy_n(in.data() + r * c, c, out.data() + (*offsets)[r]);
  return ad::make_op(shape, std::move(out), {x.features()}, [offsets, c](const std::vector<ad::Node*>& ps) {
    return [offsets, c, px = ps[0]](std::span<const double> g) {
      double* gx = ad::grad_buffer(px);
      for (std::size_t r = 0; r < offsets->size(); ++r)
        for (std::size_t k = 0; k < c; ++k) gx[r * c + k] += g[(*offsets)[r] + k];
    };
  });
}

SparseTensor3D sparsify(const std::vector<double>& dense, const GridDims& dims, std::size_t channels) {
  const std::size_t sites = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (dense.size() != sites * channels) throw ShapeError("sparsify: dense size mismatch");
  std::vector<VoxelCoord> coords;
  std::vector<double> feats;
  for (int i = 0; i < dims[0]; ++i)
    for (int j = 0; j < dims[1]; ++j)
      for (int k = 0; k < dims[2]; ++k) {
        const std::size_t base = ((static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k) * channels;
        bool any = false;
        for (std::size_t c = 0; c < channels; ++c) any = any || dense[base + c] != 0.0;
        if (!any) continue;
        coords.push_back({i, j, k});
        feats.insert(feats.end(), dense.begin() + base, dense.begin() + base + channels);
      }
  const std::size_t n = coords.size();
  return SparseTensor3D(dims, channels, std::move(coords), ad::Tensor::constant({n, channels}, std::move(feats)));
}

}  // namespace voxtrack
