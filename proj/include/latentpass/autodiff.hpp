#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// arrays. Every tensor is viewed as a matrix whose column count is the last
// extent, which is all the autoencoder needs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "latentpass/charspace.hpp"

namespace latentpass::ad {

class ShapeError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Storage is always allocated on the maximal Eigen alignment so that the
/// vectorized reductions peel the same scalar prefix on every run; with
/// arbitrary heap addresses float sums would differ between identical runs.
template <class T>
class Tensor {
 public:
  using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    validate();
  }
  Tensor(Shape shape, std::initializer_list<T> data)
      : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}
  Tensor(Shape shape, const std::vector<T>& data)
      : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}
  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate();
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }
  static Tensor scalar(T v) { return Tensor({1}, Storage{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  Storage& storage() { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  Eigen::Map<RowMatrix<T>> matrix() {
    return {data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
  }
  Eigen::Map<const RowMatrix<T>> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
  }

  /// Same data under a new shape of equal size.
  Tensor reshaped(Shape s) const { return Tensor(std::move(s), data_); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void validate() const {
    if (shape_.empty()) throw ShapeError("tensor: empty shape");
    for (auto e : shape_) {
      if (e == 0) throw ShapeError("tensor: zero extent in " + shape_string(shape_));
    }
  }

  Shape shape_;
  Storage data_;
};

/// Named parameters with Adam moment estimates.
template <class T>
class ParamStore {
 public:
  struct Entry {
    Tensor<T> value;
    Tensor<T> m;
    Tensor<T> v;
  };

  void add(const std::string& name, Tensor<T> value) {
    if (entries_.count(name)) throw Error("param store: duplicate name " + name);
    Tensor<T> zeros(value.shape());
    entries_.emplace(name, Entry{std::move(value), zeros, zeros});
  }
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor<T>& value(const std::string& name) { return entry(name).value; }
  const Tensor<T>& value(const std::string& name) const { return entry(name).value; }
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw Error("param store: unknown parameter " + name);
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw Error("param store: unknown parameter " + name);
    return it->second;
  }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }
  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.step_ != b.step_ || a.entries_.size() != b.entries_.size()) return false;
    for (const auto& [name, e] : a.entries_) {
      auto it = b.entries_.find(name);
      if (it == b.entries_.end() || !(it->second.value == e.value) ||
          !(it->second.m == e.m) || !(it->second.v == e.v)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::uint64_t step_ = 0;
};

template <class T>
using GradMap = std::map<std::string, Tensor<T>>;

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update; increments the store's step count.
template <class T>
void adam_step(ParamStore<T>& store, const GradMap<T>& grads, const AdamConfig& cfg) {
  for (const auto& [name, e] : store.entries()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw Error("adam: missing gradient for " + name);
    if (it->second.shape() != e.value.shape()) {
      throw ShapeError("adam: gradient shape " + shape_string(it->second.shape()) +
                       " for " + name + " " + shape_string(e.value.shape()));
    }
  }
  const std::uint64_t t = store.step() + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [name, e] : store.entries()) {
    const auto& g = grads.at(name);
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double gi = g[i];
      const double m = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * gi;
      const double v = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * gi * gi;
      e.m[i] = static_cast<T>(m);
      e.v[i] = static_cast<T>(v);
      const double update = cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
      e.value[i] = static_cast<T>(e.value[i] - update);
    }
  }
  store.set_step(t);
}

struct Var {
  std::size_t id = 0;
};

/// Records primitive ops in evaluation order; gradients() replays them
/// backwards once.
template <class T>
class Tape {
 public:
  using Mat = RowMatrix<T>;

  Var constant(Tensor<T> value) { return push(std::move(value), false); }

  /// Binds a stored parameter without copying it. The store must outlive
  /// the tape.
  Var param(const ParamStore<T>& store, const std::string& name) {
    if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var{it->second};
    Node n;
    n.ref = &store.value(name);
    n.requires_grad = true;
    n.param_name = name;
    nodes_.push_back(std::move(n));
    param_ids_[name] = nodes_.size() - 1;
    return Var{nodes_.size() - 1};
  }

  /// Binds every parameter of a store so that unused ones still get a
  /// (zero) gradient entry.
  void bind_all(const ParamStore<T>& store) {
    for (const auto& [name, e] : store.entries()) param(store, name);
  }

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).val(); }
  std::size_t node_count() const { return nodes_.size(); }

  // -- primitives ----------------------------------------------------------

  Var matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.rows() || A.shape().size() > 2 || B.shape().size() > 2) {
      throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
    }
    Tensor<T> out({A.rows(), B.cols()});
    out.matrix().noalias() = A.matrix() * B.matrix();
    return push(std::move(out), needs(a, b), [a, b](Tape& t, std::size_t self) {
      auto dC = t.grad_matrix(self);
      if (t.needs(a)) t.grad_matrix(a.id).noalias() += dC * t.value(b).matrix().transpose();
      if (t.needs(b)) t.grad_matrix(b.id).noalias() += t.value(a).matrix().transpose() * dC;
    });
  }

  /// Elementwise sum; b may also be a single row broadcast over a's rows.
  Var add(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.shape() == B.shape()) {
      Tensor<T> out(A.shape());
      out.matrix() = A.matrix() + B.matrix();
      return push(std::move(out), needs(a, b), [a, b](Tape& t, std::size_t self) {
        if (t.needs(a)) t.grad_matrix(a.id) += t.grad_matrix(self);
        if (t.needs(b)) t.grad_matrix(b.id) += t.grad_matrix(self);
      });
    }
    if (B.rows() == 1 && B.cols() == A.cols()) {
      Tensor<T> out(A.shape());
      out.matrix() = A.matrix().rowwise() + B.matrix().row(0);
      return push(std::move(out), needs(a, b), [a, b](Tape& t, std::size_t self) {
        auto d = t.grad_matrix(self);
        if (t.needs(a)) t.grad_matrix(a.id) += d;
        if (t.needs(b)) t.grad_matrix(b.id).row(0) += d.colwise().sum();
      });
    }
    throw ShapeError("add: " + shape_string(A.shape()) + " + " + shape_string(B.shape()));
  }

  Var sub(Var a, Var b) {
    same_shape("sub", a, b);
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix() - value(b).matrix();
    return push(std::move(out), needs(a, b), [a, b](Tape& t, std::size_t self) {
      if (t.needs(a)) t.grad_matrix(a.id) += t.grad_matrix(self);
      if (t.needs(b)) t.grad_matrix(b.id) -= t.grad_matrix(self);
    });
  }

  Var mul(Var a, Var b) {
    same_shape("mul", a, b);
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().cwiseProduct(value(b).matrix());
    return push(std::move(out), needs(a, b), [a, b](Tape& t, std::size_t self) {
      auto d = t.grad_matrix(self);
      if (t.needs(a)) t.grad_matrix(a.id) += d.cwiseProduct(t.value(b).matrix());
      if (t.needs(b)) t.grad_matrix(b.id) += d.cwiseProduct(t.value(a).matrix());
    });
  }

  Var scale(Var a, T c) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix() * c;
    return push(std::move(out), needs(a), [a, c](Tape& t, std::size_t self) {
      t.grad_matrix(a.id) += t.grad_matrix(self) * c;
    });
  }

  Var add_scalar(Var a, T c) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().array() + c;
    return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
      t.grad_matrix(a.id) += t.grad_matrix(self);
    });
  }

  Var leaky_relu(Var a, T slope) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().unaryExpr([slope](T x) { return x > T{0} ? x : slope * x; });
    return push(std::move(out), needs(a), [a, slope](Tape& t, std::size_t self) {
      auto x = t.value(a).matrix();
      t.grad_matrix(a.id) += t.grad_matrix(self).cwiseProduct(
          x.unaryExpr([slope](T v) { return v > T{0} ? T{1} : slope; }));
    });
  }

  Var tanh(Var a) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().array().tanh();
    return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
      auto y = t.value(Var{self}).matrix().array();
      t.grad_matrix(a.id).array() += t.grad_matrix(self).array() * (T{1} - y.square());
    });
  }

  /// Row-wise softmax with max subtraction.
  Var softmax(Var a) {
    const auto& A = value(a);
    Tensor<T> out(A.shape());
    auto y = out.matrix();
    y = A.matrix();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      y.row(r).array() -= y.row(r).maxCoeff();
      y.row(r) = y.row(r).array().exp();
      y.row(r) /= y.row(r).sum();
    }
    return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
      auto y = t.value(Var{self}).matrix();
      Mat dy = t.grad_matrix(self);
      Mat inner = dy.cwiseProduct(y).rowwise().sum();
      Mat dx = y.cwiseProduct(dy - inner.replicate(1, y.cols()));
      t.grad_matrix(a.id) += dx;
    });
  }

  Var log(Var a) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().array().log();
    return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
      t.grad_matrix(a.id).array() += t.grad_matrix(self).array() / t.value(a).matrix().array();
    });
  }

  Var square(Var a) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().array().square();
    return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
      t.grad_matrix(a.id).array() += T{2} * t.grad_matrix(self).array() * t.value(a).matrix().array();
    });
  }

  Var reciprocal(Var a) {
    Tensor<T> out(value(a).shape());
    out.matrix() = value(a).matrix().array().inverse();
    return push(std::move(out), needs(a), [a](Tape& t, std::size_t self) {
      auto y = t.value(Var{self}).matrix().array();
      t.grad_matrix(a.id).array() -= t.grad_matrix(self).array() * y.square();
    });
  }

  Var sum(Var a) {
    const auto data = value(a).data();
    const double s = std::accumulate(data.begin(), data.end(), 0.0);
    return push(Tensor<T>::scalar(static_cast<T>(s)), needs(a), [a](Tape& t, std::size_t self) {
      t.grad_matrix(a.id).array() += t.grad_at(self, 0);
    });
  }

  Var mean(Var a) {
    const auto data = value(a).data();
    const double n = static_cast<double>(data.size());
    const double s = std::accumulate(data.begin(), data.end(), 0.0) / n;
    return push(Tensor<T>::scalar(static_cast<T>(s)), needs(a), [a, n](Tape& t, std::size_t self) {
      t.grad_matrix(a.id).array() += static_cast<T>(t.grad_at(self, 0) / n);
    });
  }

  /// D[i][j] = ||a_i - b_j||^2 for row sets a [n,d] and b [m,d].
  Var pairwise_sq_dist(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.cols()) {
      throw ShapeError("pairwise_sq_dist: " + shape_string(A.shape()) + " vs " +
                       shape_string(B.shape()));
    }
    const std::size_t n = A.rows(), m = B.rows(), d = A.cols();
    Tensor<T> out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = static_cast<double>(A.at(i, k)) - B.at(j, k);
          acc += diff * diff;
        }
        out.at(i, j) = static_cast<T>(acc);
      }
    }
    return push(std::move(out), needs(a, b), [a, b](Tape& t, std::size_t self) {
      Mat dD = t.grad_matrix(self);
      auto Am = t.value(a).matrix();
      auto Bm = t.value(b).matrix();
      if (t.needs(a)) {
        Mat da = T{2} * (dD.rowwise().sum().asDiagonal() * Am - dD * Bm);
        t.grad_matrix(a.id) += da;
      }
      if (t.needs(b)) {
        Mat db = T{2} * (dD.colwise().sum().transpose().asDiagonal() * Bm - dD.transpose() * Am);
        t.grad_matrix(b.id) += db;
      }
    });
  }

  Var concat_rows(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.cols()) {
      throw ShapeError("concat_rows: " + shape_string(A.shape()) + " | " + shape_string(B.shape()));
    }
    Tensor<T> out({A.rows() + B.rows(), A.cols()});
    out.matrix().topRows(A.rows()) = A.matrix();
    out.matrix().bottomRows(B.rows()) = B.matrix();
    const auto ra = static_cast<Eigen::Index>(A.rows());
    const auto rb = static_cast<Eigen::Index>(B.rows());
    return push(std::move(out), needs(a, b), [a, b, ra, rb](Tape& t, std::size_t self) {
      auto d = t.grad_matrix(self);
      if (t.needs(a)) t.grad_matrix(a.id) += d.topRows(ra);
      if (t.needs(b)) t.grad_matrix(b.id) += d.bottomRows(rb);
    });
  }

  Var concat_cols(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() != B.rows()) {
      throw ShapeError("concat_cols: " + shape_string(A.shape()) + " | " + shape_string(B.shape()));
    }
    Tensor<T> out({A.rows(), A.cols() + B.cols()});
    out.matrix().leftCols(A.cols()) = A.matrix();
    out.matrix().rightCols(B.cols()) = B.matrix();
    const auto ca = static_cast<Eigen::Index>(A.cols());
    const auto cb = static_cast<Eigen::Index>(B.cols());
    return push(std::move(out), needs(a, b), [a, b, ca, cb](Tape& t, std::size_t self) {
      auto d = t.grad_matrix(self);
      if (t.needs(a)) t.grad_matrix(a.id) += d.leftCols(ca);
      if (t.needs(b)) t.grad_matrix(b.id) += d.rightCols(cb);
    });
  }

  Var reshape(Var a, Shape s) {
    const auto& A = value(a);
    if (shape_size(s) != A.size()) {
      throw ShapeError("reshape: " + shape_string(A.shape()) + " -> " + shape_string(s));
    }
    return push(A.reshaped(std::move(s)), needs(a), [a](Tape& t, std::size_t self) {
      auto& src = t.nodes_[self].grad;
      auto dst = t.grad_span(a.id);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    });
  }

  /// Mean over rows of -log softmax(logits)[target]; fused for stability.
  Var softmax_cross_entropy(Var logits, std::span<const std::uint32_t> targets) {
    const auto& L = value(logits);
    if (targets.size() != L.rows()) {
      throw ShapeError("softmax_cross_entropy: " + shape_string(L.shape()) + " with " +
                       std::to_string(targets.size()) + " targets");
    }
    const std::size_t n = L.rows(), c = L.cols();
    auto probs = std::make_shared<Mat>(L.matrix());
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (targets[r] >= c) throw ShapeError("softmax_cross_entropy: target out of range");
      auto row = probs->row(static_cast<Eigen::Index>(r));
      const T mx = row.maxCoeff();
      row.array() -= mx;
      const double lse = std::log(static_cast<double>(row.array().exp().sum()));
      loss += lse - static_cast<double>(row(targets[r]));
      row = row.array().exp() / static_cast<T>(std::exp(lse));
    }
    loss /= static_cast<double>(n);
    std::vector<std::uint32_t> tgt(targets.begin(), targets.end());
    return push(Tensor<T>::scalar(static_cast<T>(loss)), needs(logits),
                [logits, probs, tgt = std::move(tgt)](Tape& t, std::size_t self) {
                  const T scale = static_cast<T>(t.grad_at(self, 0) / static_cast<double>(tgt.size()));
                  auto g = t.grad_matrix(logits.id);
                  g += *probs * scale;
                  for (std::size_t r = 0; r < tgt.size(); ++r) {
                    g(static_cast<Eigen::Index>(r), tgt[r]) -= scale;
                  }
                });
  }

  // -- differentiation -----------------------------------------------------

  /// Reverse pass from a scalar node; returns gradients keyed by parameter
  /// name, with zeros for parameters the loss does not depend on.
  GradMap<T> gradients(Var loss) {
    if (value(loss).size() != 1) {
      throw ShapeError("gradients: loss must be scalar, got " + shape_string(value(loss).shape()));
    }
    for (auto& n : nodes_) n.grad = {};
    if (nodes_[loss.id].requires_grad) {
      grad_span(loss.id)[0] = T{1};
      for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
        n.backward(*this, i);
      }
    }
    GradMap<T> out;
    for (const auto& [name, id] : param_ids_) {
      const Node& n = nodes_[id];
      out.emplace(name, n.grad.empty() ? Tensor<T>(n.val().shape()) : n.grad);
    }
    return out;
  }

  /// Gradient of any node after gradients(); zeros when untouched.
  Tensor<T> grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.grad.empty() ? Tensor<T>(n.val().shape()) : n.grad;
  }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* ref = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    std::string param_name;
    std::function<void(Tape&, std::size_t)> backward;

    const Tensor<T>& val() const { return ref ? *ref : owned; }
  };

  bool needs(Var a) const { return nodes_[a.id].requires_grad; }
  bool needs(Var a, Var b) const { return needs(a) || needs(b); }

  void same_shape(const char* op, Var a, Var b) const {
    if (value(a).shape() != value(b).shape()) {
      throw ShapeError(std::string(op) + ": " + shape_string(value(a).shape()) + " vs " +
                       shape_string(value(b).shape()));
    }
  }

  Var push(Tensor<T> value, bool requires_grad,
           std::function<void(Tape&, std::size_t)> backward = {}) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  void ensure_grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<T>(n.val().shape());
  }
  Eigen::Map<RowMatrix<T>> grad_matrix(std::size_t id) {
    ensure_grad(id);
    return nodes_[id].grad.matrix();
  }
  Eigen::Map<RowMatrix<T>> grad_matrix(Var v) { return grad_matrix(v.id); }
  std::span<T> grad_span(std::size_t id) {
    ensure_grad(id);
    return nodes_[id].grad.data();
  }
  double grad_at(std::size_t id, std::size_t i) { return grad_span(id)[i]; }

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> param_ids_;
};

}  // namespace latentpass::ad
