// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/data_io.hpp"
#include "core/geometry.hpp"

namespace voxtrack {

inline constexpr int kMetricThresholds = 21;
inline constexpr double kPrecisionCap = 2.0;  // meters

/// Trapezoidal AUC of the fraction of frames with IoU >= t (and IoU > 0),
/// for t on {0, 0.05, ..., 1}, times 100. Perfect tracking scores 100 and
/// zero overlap scores 0.
double success_metric(std::span<const double> ious);
/// Trapezoidal AUC of the fraction of frames with error <= t, for t on
/// {0, 0.1, ..., 2} meters, normalized to [0, 100].
double precision_metric(std::span<const double> errors);

struct OpeResult {
  std::string name;
  std::vector<double> ious;
  std::vector<double> errors;
  double success = 0.0;
  double precision = 0.0;
  int fallbacks = 0;
  SequenceMeta meta;
};

/// `pred` and `gt` cover frames 1..T-1. Empty `fallbacks` means none.
OpeResult evaluate_sequence(const std::string& name, const std::vector<Box3D>& pred,
                            const std::vector<Box3D>& gt, const std::vector<bool>& fallbacks,
                            const SequenceMeta& meta);

/// Metrics over all frames of all sequences pooled together.
struct Aggregate {
  int sequences = 0;
  int frames = 0;
  double success = 0.0;
  double precision = 0.0;
  double mean_iou = 0.0;
  double mean_error = 0.0;
  int fallbacks = 0;
};

Aggregate aggregate(const std::vector<OpeResult>& results);

enum class BucketAxis { kSparsity, kDistractors };

struct BucketRow {
  double lo = 0.0;  // inclusive
  double hi = 0.0;  // exclusive; +inf for the last bucket
  int sequences = 0;
  int frames = 0;
  std::optional<double> success;
  std::optional<double> precision;
};

struct BucketReport {
  BucketAxis axis = BucketAxis::kSparsity;
  std::vector<BucketRow> rows;
  int excluded = 0;  // sequences lacking the axis metadata
};

/// Default edges: first-frame target points {0, 50, 100, 200, 400, 800}
/// and distractor counts {0, 1, 2, 4}. Bucket b spans [edges[b], edges[b+1]),
/// the last one is open above.
std::vector<double> default_bucket_edges(BucketAxis axis);

BucketReport bucket_report(const std::vector<OpeResult>& results, BucketAxis axis,
                           const std::vector<double>& edges);

/// Frame-weighted recomposition of a bucket table into the pooled metrics.
double recompose_success(const BucketReport& report);
double recompose_precision(const BucketReport& report);

/// Line-delimited JSON with fixed key order and fixed float formatting.
std::string format_sequence_record(const OpeResult& r);
std::string format_aggregate_record(const Aggregate& a);
std::string format_bucket_records(const BucketReport& report);

const char* axis_name(BucketAxis axis);

}  // namespace voxtrack
