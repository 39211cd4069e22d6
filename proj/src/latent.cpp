#include "latentpass/latent.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>

namespace latentpass {

MixtureDist::MixtureDist(std::size_t dim, double sigma) : dim_(dim), sigma_(sigma) {
  if (dim == 0) throw Error("mixture: zero dimension");
  if (!(sigma > 0.0)) throw Error("mixture: sigma must be > 0");
}

double MixtureDist::weight(std::size_t j) const {
  if (!weighted()) return 1.0 / static_cast<double>(count_);
  const double prev = j == 0 ? 0.0 : cumulative_[j - 1];
  return (cumulative_[j] - prev) / cumulative_.back();
}

std::vector<double> MixtureDist::weights() const {
  std::vector<double> w(count_);
  for (std::size_t j = 0; j < count_; ++j) w[j] = weight(j);
  return w;
}

void MixtureDist::append(std::span<const double> z, std::optional<double> raw_weight) {
  if (z.size() != dim_) throw Error("mixture: dimension mismatch");
  if (count_ > 0 && weighted() != raw_weight.has_value()) {
    throw Error("mixture: cannot mix weighted and uniform components");
  }
  if (raw_weight) {
    if (!(*raw_weight > 0.0)) throw Error("mixture: weights must be positive");
    cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + *raw_weight);
  }
  centers_.insert(centers_.end(), z.begin(), z.end());
  ++count_;
}

std::size_t MixtureDist::pick(double u) const {
  if (count_ == 0) throw Error("mixture: no components");
  if (!weighted()) {
    return std::min(count_ - 1, static_cast<std::size_t>(u * static_cast<double>(count_)));
  }
  const double target = u * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  return std::min(count_ - 1, static_cast<std::size_t>(it - cumulative_.begin()));
}

std::size_t dimension(const LatentDistribution& d) {
  struct Visitor {
    std::size_t operator()(const PriorDist& p) const { return p.dim; }
    std::size_t operator()(const PivotDist& p) const { return p.center.size(); }
    std::size_t operator()(const MixtureDist& m) const { return m.dim(); }
  };
  return std::visit(Visitor{}, d);
}

bool is_prior(const LatentDistribution& d) { return std::holds_alternative<PriorDist>(d); }

void sample_into(const LatentDistribution& d, std::size_t n, Rng& rng, std::vector<double>& out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = dimension(d);
  out.reserve(out.size() + n * k);
  if (const auto* prior = std::get_if<PriorDist>(&d)) {
    for (std::size_t i = 0; i < n * prior->dim; ++i) out.push_back(normal(rng));
  } else if (const auto* pivot = std::get_if<PivotDist>(&d)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) out.push_back(pivot->center[j] + pivot->sigma * normal(rng));
    }
  } else {
    const auto& mix = std::get<MixtureDist>(d);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = mix.center(mix.pick(uniform(rng)));
      for (std::size_t j = 0; j < k; ++j) out.push_back(c[j] + mix.sigma() * normal(rng));
    }
  }
}

LatentPoint sample(const LatentDistribution& d, Rng& rng) {
  LatentPoint z;
  sample_into(d, 1, rng, z);
  return z;
}

namespace {

double gaussian_log_density(std::span<const double> z, std::span<const double> center,
                            double sigma) {
  const double k = static_cast<double>(z.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double diff = z[i] - center[i];
    sq += diff * diff;
  }
  const double var = sigma * sigma;
  return -0.5 * k * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
}

}  // namespace

double log_density(const LatentDistribution& d, std::span<const double> z) {
  if (z.size() != dimension(d)) throw Error("log_density: dimension mismatch");
  if (std::holds_alternative<PriorDist>(d)) {
    const std::vector<double> origin(z.size(), 0.0);
    return gaussian_log_density(z, origin, 1.0);
  }
  if (const auto* pivot = std::get_if<PivotDist>(&d)) {
    return gaussian_log_density(z, pivot->center, pivot->sigma);
  }
  const auto& mix = std::get<MixtureDist>(d);
  std::vector<double> terms(mix.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mix.size(); ++j) {
    terms[j] = std::log(mix.weight(j)) + gaussian_log_density(z, mix.center(j), mix.sigma());
    best = std::max(best, terms[j]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

MixtureDist make_latent_distribution(std::span<const LatentPoint> points,
                                     std::optional<std::vector<double>> weights,
                                     double sigma) {
  if (points.empty()) throw Error("make_latent_distribution: empty point set");
  if (weights && weights->size() != points.size()) {
    throw Error("make_latent_distribution: weight count mismatch");
  }
  MixtureDist mix(points.front().size(), sigma);
  for (std::size_t j = 0; j < points.size(); ++j) {
    mix.append(points[j], weights ? std::optional<double>((*weights)[j]) : std::nullopt);
  }
  return mix;
}

MixtureDist append_component(const MixtureDist& d, std::span<const double> z,
                             std::optional<double> raw_weight) {
  MixtureDist out = d;
  out.append(z, raw_weight);
  return out;
}

void write_latent_csv(std::ostream& out, std::span<const std::string> labels,
                      std::span<const LatentPoint> points) {
  if (labels.size() != points.size()) throw Error("write_latent_csv: size mismatch");
  const std::size_t k = points.empty() ? 0 : points.front().size();
  out << "password";
  for (std::size_t j = 0; j < k; ++j) out << ",z" << j;
  out << '\n';
  out << std::setprecision(9);
  for (std::size_t i = 0; i < points.size(); ++i) {
    // Labels are quoted so commas and quotes in passwords survive.
    out << '"';
    for (char c : labels[i]) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
    for (double v : points[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace latentpass
