// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"

namespace voxtrack::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

namespace {

std::shared_ptr<Node> new_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != numel(shape)) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), 0.0);
  return n;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = ad::numel(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(new_leaf(std::move(shape), std::move(values), true));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->value.size(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->leaf; }
std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }
std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->grad; }
void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

double Tensor::item() const {
  if (node_->value.size() != 1) throw ShapeError("item() on a non-scalar tensor");
  return node_->value[0];
}

double* grad_buffer(Node* n) {
  if (!n->requires_grad) return nullptr;
  if (n->grad.size() != n->value.size()) n->grad.assign(n->value.size(), 0.0);
  return n->grad.data();
}

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<BackwardFn(const std::vector<Node*>&)> make_backward) {
  if (values.size() != numel(shape)) {
    throw ShapeError("op output of shape " + shape_str(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->leaf = false;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.node_->requires_grad;
  if (needs) {
    n->requires_grad = true;
    std::vector<Node*> raw;
    raw.reserve(parents.size());
    for (auto& p : parents) {
      raw.push_back(p.node_.get());
      n->parents.push_back(p.node_);
    }
    n->backward = make_backward(raw);
  }
  return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) throw UsageError("backward() needs a scalar loss");
  Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (!n->leaf) n->grad.assign(n->value.size(), 0.0);
  }
  grad_buffer(root)[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->leaf && n->backward) n->backward(n->grad);
  }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

// Elementwise unary op with derivative f'(x, y) evaluated from input and output.
template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D df) {
  std::vector<double> out(a.numel());
  const auto x = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return make_op(a.shape(), std::move(out), {a}, [df](const std::vector<Node*>& ps) {
    Node* p = ps[0];
    return [p, df](std::span<const double> g) {
      double* gp = grad_buffer(p);
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * df(p->value[i]);
    };
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](const std::vector<Node*>& ps) {
    return [pa = ps[0], pb = ps[1]](std::span<const double> g) {
      if (double* ga = grad_buffer(pa)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      if (double* gb = grad_buffer(pb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    };
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](const std::vector<Node*>& ps) {
    return [pa = ps[0], pb = ps[1]](std::span<const double> g) {
      if (double* ga = grad_buffer(pa)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      if (double* gb = grad_buffer(pb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    };
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](const std::vector<Node*>& ps) {
    return [pa = ps[0], pb = ps[1]](std::span<const double> g) {
      if (double* ga = grad_buffer(pa))
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb->value[i];
      if (double* gb = grad_buffer(pb))
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa->value[i];
    };
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  auto f = [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };
  return unary(a, f, [f](double x) {
    const double s = f(x);
    return s * (1.0 - s);
  });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Tensor abs(const Tensor& a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op({}, {s}, {a}, [](const std::vector<Node*>& ps) {
    return [p = ps[0]](std::span<const double> g) {
      double* gp = grad_buffer(p);
      for (std::size_t i = 0; i < p->value.size(); ++i) gp[i] += g[0];
    };
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw ShapeError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_op(std::move(shape), std::move(out), {a}, [](const std::vector<Node*>& ps) {
    return [p = ps[0]](std::span<const double> g) {
      double* gp = grad_buffer(p);
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
    };
  });
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.numel()) throw ShapeError("slice out of range");
  std::vector<double> out(a.values().begin() + begin, a.values().begin() + begin + count);
  return make_op({count}, std::move(out), {a}, [begin](const std::vector<Node*>& ps) {
    return [p = ps[0], begin](std::span<const double> g) {
      double* gp = grad_buffer(p);
      for (std::size_t i = 0; i < g.size(); ++i) gp[begin + i] += g[i];
    };
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const std::size_t n = out.size();
  return make_op({n}, std::move(out), parts, [offsets](const std::vector<Node*>& ps) {
    return [ps, offsets](std::span<const double> g) {
      for (std::size_t k = 0; k < ps.size(); ++k) {
        if (double* gp = grad_buffer(ps[k])) {
          for (std::size_t i = 0; i < ps[k]->value.size(); ++i) gp[i] += g[offsets[k] + i];
        }
      }
    };
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < k; ++r) {
      const double x = av[i * k + r];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * bv[r * n + j];
    }
  return make_op({m, n}, std::move(out), {a, b}, [m, k, n](const std::vector<Node*>& ps) {
    return [pa = ps[0], pb = ps[1], m, k, n](std::span<const double> g) {
      if (double* ga = grad_buffer(pa)) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t r = 0; r < k; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb->value[r * n + j];
            ga[i * k + r] += acc;
          }
      }
      if (double* gb = grad_buffer(pb)) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t r = 0; r < k; ++r) {
            const double x = pa->value[i * k + r];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gb[r * n + j] += x * g[i * n + j];
          }
      }
    };
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.shape().size() != 2 || bias.shape() != Shape{weight.shape()[1]}) {
    throw ShapeError("linear: weight " + shape_str(weight.shape()) + ", bias " +
                     shape_str(bias.shape()));
  }
  const bool vec = x.shape().size() == 1;
  const Tensor x2 = vec ? reshape(x, {1, x.numel()}) : x;
  if (x2.shape().size() != 2 || x2.shape()[1] != weight.shape()[0]) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " +
                     shape_str(weight.shape()));
  }
  const std::size_t rows = x2.shape()[0], out = weight.shape()[1];
  const Tensor prod = matmul(x2, weight);
  std::vector<double> y(prod.values().begin(), prod.values().end());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < out; ++j) y[r * out + j] += bias.values()[j];
  Shape shape = vec ? Shape{out} : Shape{rows, out};
  return make_op(std::move(shape), std::move(y), {prod, bias}, [rows, out](const std::vector<Node*>& ps) {
    return [pp = ps[0], pb = ps[1], rows, out](std::span<const double> g) {
      if (double* gp = grad_buffer(pp)) for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
      if (double* gb = grad_buffer(pb))
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < out; ++j) gb[j] += g[r * out + j];
    };
  });
}

Tensor max_rows(const Tensor& x) {
  if (x.shape().size() != 2) throw ShapeError("max_rows expects (n x c), got " + shape_str(x.shape()));
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  std::vector<double> out(c, 0.0);
  std::vector<std::size_t> arg(c, 0);
  const auto v = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (n == 0) break;
    double best = v[ch];
    std::size_t at = 0;
    for (std::size_t r = 1; r < n; ++r) {
      if (v[r * c + ch] > best) {
        best = v[r * c + ch];
        at = r;
      }
    }
    out[ch] = best;
    arg[ch] = at;
  }
  return make_op({c}, std::move(out), {x}, [arg, n, c](const std::vector<Node*>& ps) {
    return [p = ps[0], arg, n, c](std::span<const double> g) {
      if (n == 0) return;
      double* gp = grad_buffer(p);
      for (std::size_t ch = 0; ch < c; ++ch) gp[arg[ch] * c + ch] += g[ch];
    };
  });
}

// ---------------------------------------------------------------------------
// Parameters and optimizer

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<double> init) {
  if (entries_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
  Entry e{Tensor::parameter(std::move(shape), std::move(init)), {}, {}};
  e.m.assign(e.value.numel(), 0.0);
  e.v.assign(e.value.numel(), 0.0);
  auto [it, ok] = entries_.emplace(name, std::move(e));
  return it->second.value;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidArgument("unknown parameter: " + name);
  return it->second.value;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.value.zero_grad();
}

void ParamStore::scale_grad(double s) {
  for (auto& [_, e] : entries_)
    for (double& g : e.value.mutable_grad()) g *= s;
}

void step_adam(ParamStore& store, const AdamConfig& cfg) {
  const std::int64_t t = store.step() + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [_, e] : store.entries()) {
    auto val = e.value.mutable_values();
    auto grad = e.value.grad();
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g;
      e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = e.m[i] / bc1;
      const double vhat = e.v[i] / bc2;
      val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  store.set_step(t);
}

std::vector<double> fan_in_uniform(std::size_t count, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> out(count);
  for (double& v : out) v = dist(rng);
  return out;
}

void register_mlp(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& widths,
                  std::mt19937_64& rng) {
  if (widths.size() < 2) throw InvalidArgument("an MLP needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string base = prefix + ".fc" + std::to_string(i);
    store.add(base + ".weight", {widths[i], widths[i + 1]},
              fan_in_uniform(widths[i] * widths[i + 1], widths[i], rng));
    store.add(base + ".bias", {widths[i + 1]}, std::vector<double>(widths[i + 1], 0.0));
  }
}

Tensor mlp_forward(const Tensor& x, const ParamStore& store, const std::string& prefix,
                   std::size_t num_layers) {
  Tensor h = x;
  for (std::size_t i = 0; i < num_layers; ++i) {
    const std::string base = prefix + ".fc" + std::to_string(i);
    h = linear(h, store.get(base + ".weight"), store.get(base + ".bias"));
    if (i + 1 < num_layers) h = relu(h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'V', 'X', 'T', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void le(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U u;
    std::memcpy(&u, &v, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  void doubles(const std::vector<double>& v) {
    for (double d : v) le(d);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, s_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> out(n);
    for (double& d : out) d = le<double>();
    return out;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw FormatError("checkpoint truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ParamStore& store, const std::string& metadata) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint64_t>(metadata.size());
  w.bytes(metadata.data(), metadata.size());
  w.le<std::int64_t>(store.step());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, e] : store.entries()) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.le<std::uint32_t>(static_cast<std::uint32_t>(e.value.shape().size()));
    for (auto d : e.value.shape()) w.le<std::uint64_t>(d);
    w.doubles({e.value.values().begin(), e.value.values().end()});
    w.doubles(e.m);
    w.doubles(e.v);
  }
  return w.take();
}

ParamStore deserialize_checkpoint(const std::string& bytes, std::string* metadata) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not a voxtrack checkpoint");
  const auto meta_len = r.le<std::uint64_t>();
  std::string meta = r.str(meta_len);
  if (metadata) *metadata = std::move(meta);
  ParamStore store;
  store.set_step(r.le<std::int64_t>());
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.str(r.le<std::uint32_t>());
    const auto ndim = r.le<std::uint32_t>();
    if (ndim > 8) throw FormatError("checkpoint tensor rank too large");
    Shape shape(ndim);
    for (auto& d : shape) d = r.le<std::uint64_t>();
    const std::size_t n = numel(shape);
    if (n > bytes.size()) throw FormatError("checkpoint tensor size exceeds file");
    store.add(name, shape, r.doubles(n));
    auto& e = store.entries().at(name);
    e.m = r.doubles(n);
    e.v = r.doubles(n);
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  return store;
}

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata) {
  const std::string bytes = serialize_checkpoint(store, metadata);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

ParamStore load_checkpoint(const std::string& path, std::string* metadata) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str(), metadata);
}

}  // namespace voxtrack::ad
