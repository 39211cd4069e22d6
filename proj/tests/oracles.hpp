#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests. Nothing here calls the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "latentpass/autodiff.hpp"
#include "latentpass/charspace.hpp"

namespace oracle {

using latentpass::Rng;
using Tape = latentpass::ad::Tape<double>;
using Tensor = latentpass::ad::Tensor<double>;
using Store = latentpass::ad::ParamStore<double>;
using Var = latentpass::ad::Var;

/// Builds a scalar loss from the named parameters of a store.
using LossBuilder = std::function<Var(Tape&, const Store&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

/// Relative error with a floor on the scale: |a - n| / max(|a|, |n|, 1e-2).
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-2});
}

/// Central differences with step h on every coordinate of every parameter.
inline GradCheck check_gradients(Store& store, const LossBuilder& build, double h = 1e-6) {
  GradCheck out;
  latentpass::ad::GradMap<double> analytic;
  {
    Tape tape;
    tape.bind_all(store);
    analytic = tape.gradients(build(tape, store));
  }
  auto eval = [&] {
    Tape tape;
    return tape.value(build(tape, store))[0];
  };
  for (auto& [name, entry] : store.entries()) {
    auto& values = entry.value.storage();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = eval();
      values[i] = keep - h;
      const double down = eval();
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      out.max_rel_error = std::max(out.max_rel_error, rel_error(analytic.at(name)[i], numeric));
      ++out.coordinates;
    }
  }
  return out;
}

/// Uniform entries in [lo, hi], each at least `gap` away from zero.
inline Tensor random_tensor(latentpass::ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            double gap = 0.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.storage()) {
    do {
      v = u(rng);
    } while (std::abs(v) < gap);
  }
  return t;
}

/// Position-by-position template check written without the library matcher.
inline bool loop_matches(const std::u32string& x, const latentpass::Template& t) {
  if (x.size() != t.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const char32_t c = t.cells()[i];
    if (c == latentpass::kWildcardSymbol) continue;
    if (c != x[i]) return false;
  }
  return true;
}

inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Log-density of a uniform isotropic Gaussian mixture, summed directly.
inline double mixture_log_density(const std::vector<std::vector<double>>& centers, double sigma,
                                  const std::vector<double>& z) {
  const double k = static_cast<double>(z.size());
  double total = 0.0;
  for (const auto& c : centers) {
    double sq = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sq += (z[i] - c[i]) * (z[i] - c[i]);
    total += std::exp(-sq / (2.0 * sigma * sigma)) / std::pow(2.0 * M_PI * sigma * sigma, k / 2.0);
  }
  return std::log(total / static_cast<double>(centers.size()));
}

}  // namespace oracle
