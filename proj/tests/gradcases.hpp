#pragma once

// One random finite-difference case per tape primitive. Each case owns its
// parameters and a scalar loss that projects the primitive's output onto a
// fixed random tensor, so every output coordinate contributes.

#include <memory>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace gradcases {

using oracle::Rng;
using oracle::Store;
using oracle::Tape;
using oracle::Tensor;
using oracle::Var;

struct Case {
  std::string primitive;
  Store store;
  oracle::LossBuilder loss;
};

using Op = std::function<Var(Tape&, const Store&)>;

inline Case make(std::string name, Store store, Op op, Rng& rng) {
  Tape probe;
  const auto shape = probe.value(op(probe, store)).shape();
  auto proj = std::make_shared<Tensor>(oracle::random_tensor(shape, rng));
  Case c{std::move(name), std::move(store), {}};
  c.loss = [op, proj](Tape& t, const Store& s) {
    return t.sum(t.mul(op(t, s), t.constant(*proj)));
  };
  return c;
}

inline Store one(const std::string& name, Tensor v) {
  Store s;
  s.add(name, std::move(v));
  return s;
}

inline Store two(Tensor a, Tensor b) {
  Store s;
  s.add("a", std::move(a));
  s.add("b", std::move(b));
  return s;
}

/// Names of every primitive covered by cases_for().
inline std::vector<std::string> primitives() {
  return {"matmul",     "add",        "add_rowwise", "sub",          "mul",
          "scale",      "add_scalar", "leaky_relu",  "tanh",         "softmax",
          "log",        "square",     "reciprocal",  "sum",          "mean",
          "pairwise_sq_dist", "concat_rows", "concat_cols", "reshape",
          "softmax_cross_entropy"};
}

inline Case case_for(const std::string& p, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  const std::size_t r = dim(rng), c = dim(rng), k = dim(rng);
  auto rnd = [&](std::size_t a, std::size_t b) { return oracle::random_tensor({a, b}, rng); };
  auto A = [](Tape& t, const Store& s) { return t.param(s, "a"); };
  auto B = [](Tape& t, const Store& s) { return t.param(s, "b"); };

  if (p == "matmul") {
    return make(p, two(rnd(r, k), rnd(k, c)), [=](Tape& t, const Store& s) { return t.matmul(A(t, s), B(t, s)); }, rng);
  }
  if (p == "add") {
    return make(p, two(rnd(r, c), rnd(r, c)), [=](Tape& t, const Store& s) { return t.add(A(t, s), B(t, s)); }, rng);
  }
  if (p == "add_rowwise") {
    return make(p, two(rnd(r, c), rnd(1, c)), [=](Tape& t, const Store& s) { return t.add(A(t, s), B(t, s)); }, rng);
  }
  if (p == "sub") {
    return make(p, two(rnd(r, c), rnd(r, c)), [=](Tape& t, const Store& s) { return t.sub(A(t, s), B(t, s)); }, rng);
  }
  if (p == "mul") {
    return make(p, two(rnd(r, c), rnd(r, c)), [=](Tape& t, const Store& s) { return t.mul(A(t, s), B(t, s)); }, rng);
  }
  if (p == "scale") {
    const double f = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    return make(p, one("a", rnd(r, c)), [=](Tape& t, const Store& s) { return t.scale(A(t, s), f); }, rng);
  }
  if (p == "add_scalar") {
    const double f = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    return make(p, one("a", rnd(r, c)), [=](Tape& t, const Store& s) { return t.add_scalar(A(t, s), f); }, rng);
  }
  if (p == "leaky_relu") {
    // Entries kept away from the kink so the central difference is exact.
    return make(p, one("a", oracle::random_tensor({r, c}, rng, -1.0, 1.0, 1e-2)),
                [=](Tape& t, const Store& s) { return t.leaky_relu(A(t, s), 0.1); }, rng);
  }
  if (p == "tanh") {
    return make(p, one("a", oracle::random_tensor({r, c}, rng, -2.0, 2.0)),
                [=](Tape& t, const Store& s) { return t.tanh(A(t, s)); }, rng);
  }
  if (p == "softmax") {
    return make(p, one("a", oracle::random_tensor({r, c + 1}, rng, -3.0, 3.0)),
                [=](Tape& t, const Store& s) { return t.softmax(A(t, s)); }, rng);
  }
  if (p == "log") {
    return make(p, one("a", oracle::random_tensor({r, c}, rng, 0.2, 3.0)),
                [=](Tape& t, const Store& s) { return t.log(A(t, s)); }, rng);
  }
  if (p == "square") {
    return make(p, one("a", rnd(r, c)), [=](Tape& t, const Store& s) { return t.square(A(t, s)); }, rng);
  }
  if (p == "reciprocal") {
    return make(p, one("a", oracle::random_tensor({r, c}, rng, 0.3, 2.0)),
                [=](Tape& t, const Store& s) { return t.reciprocal(A(t, s)); }, rng);
  }
  if (p == "sum") {
    return make(p, one("a", rnd(r, c)), [=](Tape& t, const Store& s) { return t.sum(A(t, s)); }, rng);
  }
  if (p == "mean") {
    return make(p, one("a", rnd(r, c)), [=](Tape& t, const Store& s) { return t.mean(A(t, s)); }, rng);
  }
  if (p == "pairwise_sq_dist") {
    return make(p, two(rnd(r, k), rnd(c, k)),
                [=](Tape& t, const Store& s) { return t.pairwise_sq_dist(A(t, s), B(t, s)); }, rng);
  }
  if (p == "concat_rows") {
    return make(p, two(rnd(r, c), rnd(k, c)),
                [=](Tape& t, const Store& s) { return t.concat_rows(A(t, s), B(t, s)); }, rng);
  }
  if (p == "concat_cols") {
    return make(p, two(rnd(r, c), rnd(r, k)),
                [=](Tape& t, const Store& s) { return t.concat_cols(A(t, s), B(t, s)); }, rng);
  }
  if (p == "reshape") {
    return make(p, one("a", rnd(r, c * k)),
                [=](Tape& t, const Store& s) { return t.reshape(A(t, s), {r * c, k}); }, rng);
  }
  if (p == "softmax_cross_entropy") {
    auto targets = std::make_shared<std::vector<std::uint32_t>>();
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(c));
    for (std::size_t i = 0; i < r; ++i) targets->push_back(pick(rng));
    return make(p, one("a", oracle::random_tensor({r, c + 1}, rng, -3.0, 3.0)),
                [=](Tape& t, const Store& s) { return t.softmax_cross_entropy(A(t, s), *targets); },
                rng);
  }
  throw std::invalid_argument("no gradient case for " + p);
}

}  // namespace gradcases
