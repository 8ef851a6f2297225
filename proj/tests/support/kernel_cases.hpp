// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

// Randomized kernel-versus-dense-oracle sweeps shared by unit and acceptance tests.
// `max_dim` bounds every grid extent; upsampling bounds the fine grid.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "support/oracles.hpp"

namespace oracle {

struct KernelSweep {
  std::string kernel;
  int cases = 0;
  double worst = 0.0;
  int empty_outputs = 0;
};

inline GridDims random_dims(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return {d(rng), d(rng), d(rng)};
}

inline KernelSweep sweep_conv(int cases, std::uint64_t seed, bool submanifold, int max_dim = 7) {
  using namespace voxtrack;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ch(1, 4), kpick(0, 2), spick(1, 2);
  std::uniform_real_distribution<double> dens(0.05, 0.5);
  KernelSweep r{submanifold ? "submanifold_conv" : "strided_conv"};
  for (int c = 0; c < cases; ++c) {
    ConvSpec spec;
    spec.in_channels = static_cast<std::size_t>(ch(rng));
    spec.out_channels = static_cast<std::size_t>(ch(rng));
    spec.kernel = 2 * kpick(rng) + 1;
    spec.mode = submanifold ? ConvMode::kSubmanifold : ConvMode::kStrided;
    spec.stride = submanifold ? 1 : spick(rng);
    const auto x = random_sparse(rng, random_dims(rng, 1, max_dim), spec.in_channels, dens(rng));
    const auto w = random_vec(rng, spec.kernel_volume() * spec.in_channels * spec.out_channels);
    const auto b = random_vec(rng, spec.out_channels);
    const auto got = sparse_conv(
        x, spec, ad::Tensor::constant({spec.kernel_volume(), spec.in_channels, spec.out_channels}, w),
        ad::Tensor::constant({spec.out_channels}, b));
    const auto want = conv(to_dense(x), w, b, spec.out_channels, spec.kernel, spec.stride, submanifold);
    r.worst = std::max(r.worst, max_rel_error(to_sites(got), want));
    r.empty_outputs += want.empty() ? 1 : 0;
    ++r.cases;
  }
  return r;
}

inline KernelSweep sweep_pool(int cases, std::uint64_t seed, bool use_max, int max_dim = 9) {
  using namespace voxtrack;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ch(1, 4), fpick(2, 3);
  std::uniform_real_distribution<double> dens(0.05, 0.6);
  KernelSweep r{use_max ? "max_pool" : "avg_pool"};
  for (int c = 0; c < cases; ++c) {
    const int f = fpick(rng);
    const auto x = random_sparse(rng, random_dims(rng, 1, max_dim), static_cast<std::size_t>(ch(rng)), dens(rng));
    const auto got = use_max ? max_pool(x, f) : avg_pool(x, f);
    const auto want = pool(to_dense(x), f, use_max);
    r.worst = std::max(r.worst, max_rel_error(to_sites(got), want));
    r.empty_outputs += want.empty() ? 1 : 0;
    ++r.cases;
  }
  return r;
}

inline KernelSweep sweep_upsample(int cases, std::uint64_t seed, int max_dim = 12) {
  using namespace voxtrack;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ch(1, 4), fpick(2, 3);
  std::uniform_real_distribution<double> dens(0.05, 0.6);
  KernelSweep r{"upsample_lerp"};
  for (int c = 0; c < cases; ++c) {
    const int f = fpick(rng);
    const GridDims fine = random_dims(rng, 1, max_dim);
    const GridDims coarse{ceil_div(fine[0], f), ceil_div(fine[1], f), ceil_div(fine[2], f)};
    const auto x = random_sparse(rng, coarse, static_cast<std::size_t>(ch(rng)), dens(rng));
    const auto target = random_sparse(rng, fine, 1, dens(rng)).coords();
    const auto got = upsample_lerp(x, f, fine, target);
    const auto want = upsample(to_dense(x), f, target);
    r.worst = std::max(r.worst, max_rel_error(to_sites(got), want));
    r.empty_outputs += want.empty() ? 1 : 0;
    ++r.cases;
  }
  return r;
}

}  // namespace oracle
