// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "core/error.hpp"

namespace voxtrack {

namespace {

// Trapezoid weights on a uniform grid over [0, 1]: 1/2 at both ends, else 1, over (n - 1).
double trapezoid(const std::vector<double>& frac) {
  const std::size_t n = frac.size();
  double area = 0.5 * (frac.front() + frac.back());
  for (std::size_t i = 1; i + 1 < n; ++i) area += frac[i];
  return area / static_cast<double>(n - 1);
}

template <typename Pass>
double curve_auc(std::span<const double> xs, double t_max, Pass pass) {
  std::vector<double> frac(kMetricThresholds);
  for (int i = 0; i < kMetricThresholds; ++i) {
    const double t = t_max * i / (kMetricThresholds - 1);
    std::size_t hit = 0;
    for (double x : xs) hit += pass(x, t) ? 1 : 0;
    frac[static_cast<std::size_t>(i)] = static_cast<double>(hit) / static_cast<double>(xs.size());
  }
  return 100.0 * trapezoid(frac);
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "null"; }
std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "null"; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", c);
      out += buf;
      continue;
    }
    out += c;
  }
  return out;
}

std::vector<double> pooled(const std::vector<const OpeResult*>& rs, bool ious) {
  std::vector<double> v;
  for (const auto* r : rs) {
    const auto& src = ious ? r->ious : r->errors;
    v.insert(v.end(), src.begin(), src.end());
  }
  return v;
}

}  // namespace

double success_metric(std::span<const double> ious) {
  if (ious.empty()) throw InvalidArgument("success_metric needs at least one IoU");
  for (double v : ious) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("IoU values must lie in [0, 1]");
  }
  // IoU >= t, except that a frame without overlap never succeeds.
  return curve_auc(ious, 1.0, [](double x, double t) { return x > 0.0 && x >= t; });
}

double precision_metric(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("precision_metric needs at least one error");
  for (double v : errors) {
    if (!(v >= 0.0) || std::isnan(v)) throw InvalidArgument("center errors must be non-negative");
  }
  return curve_auc(errors, kPrecisionCap, [](double x, double t) { return x <= t; });
}

OpeResult evaluate_sequence(const std::string& name, const std::vector<Box3D>& pred,
                            const std::vector<Box3D>& gt, const std::vector<bool>& fallbacks,
                            const SequenceMeta& meta) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw InvalidArgument(name + ": predictions and ground truth must align and be non-empty");
  }
  if (!fallbacks.empty() && fallbacks.size() != pred.size()) {
    throw InvalidArgument(name + ": fallback flags must align with predictions");
  }
  OpeResult r;
  r.name = name;
  r.meta = meta;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    r.ious.push_back(iou3d(pred[i], gt[i]));
    r.errors.push_back(center_distance(pred[i], gt[i]));
    if (!fallbacks.empty() && fallbacks[i]) ++r.fallbacks;
  }
  r.success = success_metric(r.ious);
  r.precision = precision_metric(r.errors);
  return r;
}

Aggregate aggregate(const std::vector<OpeResult>& results) {
  Aggregate a;
  std::vector<const OpeResult*> all;
  for (const auto& r : results) all.push_back(&r);
  a.sequences = static_cast<int>(results.size());
  const auto ious = pooled(all, true);
  const auto errs = pooled(all, false);
  a.frames = static_cast<int>(ious.size());
  for (const auto& r : results) a.fallbacks += r.fallbacks;
  if (ious.empty()) return a;
  a.success = success_metric(ious);
  a.precision = precision_metric(errs);
  double si = 0.0, se = 0.0;
  for (std::size_t i = 0; i < ious.size(); ++i) {
    si += ious[i];
    se += errs[i];
  }
  a.mean_iou = si / static_cast<double>(ious.size());
  a.mean_error = se / static_cast<double>(errs.size());
  return a;
}

const char* axis_name(BucketAxis axis) {
  return axis == BucketAxis::kSparsity ? "sparsity" : "distractors";
}

std::vector<double> default_bucket_edges(BucketAxis axis) {
  if (axis == BucketAxis::kSparsity) return {0, 50, 100, 200, 400, 800};
  return {0, 1, 2, 4};
}

BucketReport bucket_report(const std::vector<OpeResult>& results, BucketAxis axis,
                           const std::vector<double>& edges) {
  if (edges.empty()) throw InvalidArgument("bucket_report needs at least one edge");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InvalidArgument("bucket edges must increase strictly");
  }
  BucketReport rep;
  rep.axis = axis;
  std::vector<std::vector<const OpeResult*>> members(edges.size());
  for (const auto& r : results) {
    const auto& v = axis == BucketAxis::kSparsity ? r.meta.first_frame_points : r.meta.distractors;
    if (!v || static_cast<double>(*v) < edges.front()) {
      ++rep.excluded;
      continue;
    }
    std::size_t b = edges.size() - 1;
    while (static_cast<double>(*v) < edges[b]) --b;
    members[b].push_back(&r);
  }
  for (std::size_t b = 0; b < edges.size(); ++b) {
    BucketRow row;
    row.lo = edges[b];
    row.hi = b + 1 < edges.size() ? edges[b + 1] : std::numeric_limits<double>::infinity();
    row.sequences = static_cast<int>(members[b].size());
    const auto ious = pooled(members[b], true);
    row.frames = static_cast<int>(ious.size());
    if (!ious.empty()) {
      row.success = success_metric(ious);
      row.precision = precision_metric(pooled(members[b], false));
    }
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {
double recompose(const BucketReport& report, bool success) {
  double num_sum = 0.0;
  int frames = 0;
  for (const auto& row : report.rows) {
    const auto& v = success ? row.success : row.precision;
    if (!v) continue;
    num_sum += *v * row.frames;
    frames += row.frames;
  }
  return frames ? num_sum / frames : 0.0;
}
}  // namespace

double recompose_success(const BucketReport& report) { return recompose(report, true); }
double recompose_precision(const BucketReport& report) { return recompose(report, false); }

std::string format_sequence_record(const OpeResult& r) {
  double mi = 0.0, me = 0.0;
  for (std::size_t i = 0; i < r.ious.size(); ++i) {
    mi += r.ious[i];
    me += r.errors[i];
  }
  if (!r.ious.empty()) {
    mi /= static_cast<double>(r.ious.size());
    me /= static_cast<double>(r.ious.size());
  }
  return "{\"type\":\"sequence\",\"name\":\"" + escape(r.name) +
         "\",\"frames\":" + std::to_string(r.ious.size()) + ",\"success\":" + num(r.success) +
         ",\"precision\":" + num(r.precision) + ",\"mean_iou\":" + num(mi) +
         ",\"mean_error\":" + num(me) + ",\"fallbacks\":" + std::to_string(r.fallbacks) +
         ",\"first_frame_points\":" + opt_int(r.meta.first_frame_points) +
         ",\"distractors\":" + opt_int(r.meta.distractors) + "}\n";
}

std::string format_aggregate_record(const Aggregate& a) {
  return "{\"type\":\"aggregate\",\"sequences\":" + std::to_string(a.sequences) +
         ",\"frames\":" + std::to_string(a.frames) + ",\"success\":" + num(a.success) +
         ",\"precision\":" + num(a.precision) + ",\"mean_iou\":" + num(a.mean_iou) +
         ",\"mean_error\":" + num(a.mean_error) + ",\"fallbacks\":" + std::to_string(a.fallbacks) +
         "}\n";
}

std::string format_bucket_records(const BucketReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    out += std::string("{\"type\":\"bucket\",\"axis\":\"") + axis_name(report.axis) +
           "\",\"lo\":" + num(row.lo) + ",\"hi\":" + (std::isinf(row.hi) ? "null" : num(row.hi)) +
           ",\"sequences\":" + std::to_string(row.sequences) +
           ",\"frames\":" + std::to_string(row.frames) + ",\"success\":" + opt_num(row.success) +
           ",\"precision\":" + opt_num(row.precision) + "}\n";
  }
  out += std::string("{\"type\":\"bucket_summary\",\"axis\":\"") + axis_name(report.axis) +
         "\",\"excluded\":" + std::to_string(report.excluded) + "}\n";
  return out;
}

}  // namespace voxtrack
