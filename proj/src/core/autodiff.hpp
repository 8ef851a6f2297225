// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace voxtrack::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Gradient callback of an operation: receives d(loss)/d(output) and adds
/// the contributions into the parents' gradient buffers.
using BackwardFn = std::function<void(std::span<const double> out_grad)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};

/// Reference-counted handle to a node of the differentiation graph.
///
/// Copies share the node. Leaves are either constants or parameters;
/// parameters own a gradient buffer that persists across backward passes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double v) { return constant({}, {v}); }
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  bool requires_grad() const;
  bool is_leaf() const;

  std::span<const double> values() const;
  /// Writable storage; meant for optimizers and finite-difference probes.
  std::span<double> mutable_values();
  /// Empty until a gradient has been materialized.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  double item() const;
  Node* node() const { return node_.get(); }

 private:
  friend Tensor make_op(Shape, std::vector<double>, std::vector<Tensor>,
                        std::function<BackwardFn(const std::vector<Node*>&)>);
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

/// Gradient buffer of `n`, allocated on demand; nullptr when `n` does not
/// require a gradient.
double* grad_buffer(Node* n);

/// Builds a graph node. `make_backward` receives the parent nodes and
/// returns the gradient callback; it is only invoked when some parent
/// requires a gradient.
Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<BackwardFn(const std::vector<Node*>&)> make_backward);

/// Reverse sweep from a scalar `loss`. Parameter gradients accumulate across
/// calls; intermediate gradients are recomputed each call.
void backward(const Tensor& loss);

// Elementwise and reduction ops. Binary elementwise ops require equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
/// Contiguous slice [begin, begin + count) of a flattened tensor, as 1-D.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t count);
Tensor concat(const std::vector<Tensor>& parts);

/// (m x k) * (k x n).
Tensor matmul(const Tensor& a, const Tensor& b);
/// x: (in) or (n x in); weight: (in x out); bias: (out).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// Columnwise max of an (n x c) tensor; ties go to the lowest row. n == 0 yields zeros.
Tensor max_rows(const Tensor& x);

/// Learned parameters plus Adam moments, keyed by name in sorted order.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    std::vector<double> m;
    std::vector<double> v;
  };

  Tensor add(const std::string& name, Shape shape, std::vector<double> init);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t num_values() const;

  void zero_grad();
  void scale_grad(double s);

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update over every parameter; increments the step.
void step_adam(ParamStore& store, const AdamConfig& cfg);

/// He-style uniform init, U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)).
std::vector<double> fan_in_uniform(std::size_t count, std::size_t fan_in, std::mt19937_64& rng);

/// Registers `prefix.fc{i}.weight` (in x out) and `prefix.fc{i}.bias`.
void register_mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& widths,
                  std::mt19937_64& rng);
/// Affine + ReLU per hidden layer, affine output.
Tensor mlp_forward(const Tensor& x, const ParamStore& store, const std::string& prefix,
                   std::size_t num_layers);

/// Binary checkpoint: magic, metadata string, then per parameter the name,
/// shape and little-endian doubles for value, first and second moment.
void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata);
std::string serialize_checkpoint(const ParamStore& store, const std::string& metadata);
ParamStore load_checkpoint(const std::string& path, std::string* metadata);
ParamStore deserialize_checkpoint(const std::string& bytes, std::string* metadata);

}  // namespace voxtrack::ad
