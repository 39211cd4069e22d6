#pragma once

// Latent distributions: the N(0, I) prior, pivot Gaussians N(c, sigma^2 I)
// and finite isotropic Gaussian mixtures over guessed latent points.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "latentpass/charspace.hpp"

namespace latentpass {

using LatentPoint = std::vector<double>;

struct PriorDist {
  std::size_t dim = 0;
};

struct PivotDist {
  LatentPoint center;
  double sigma = 1.0;
};

/// Components share one bandwidth. Weights are kept unnormalized; uniform
/// mixtures store no weights at all.
class MixtureDist {
 public:
  MixtureDist(std::size_t dim, double sigma);

  std::size_t dim() const { return dim_; }
  double sigma() const { return sigma_; }
  std::size_t size() const { return count_; }
  bool weighted() const { return !cumulative_.empty(); }
  std::span<const double> center(std::size_t j) const {
    return {centers_.data() + j * dim_, dim_};
  }
  /// Normalized weight of component j.
  double weight(std::size_t j) const;
  std::vector<double> weights() const;

  /// In-place append. raw_weight is required for weighted mixtures and
  /// must be absent for uniform ones.
  void append(std::span<const double> z, std::optional<double> raw_weight = std::nullopt);

  /// Index of the component picked by a uniform draw u in [0, 1).
  std::size_t pick(double u) const;

 private:
  std::size_t dim_;
  double sigma_;
  std::size_t count_ = 0;
  std::vector<double> centers_;
  std::vector<double> cumulative_;  // prefix sums of raw weights
};

using LatentDistribution = std::variant<PriorDist, PivotDist, MixtureDist>;

std::size_t dimension(const LatentDistribution& d);
bool is_prior(const LatentDistribution& d);

LatentPoint sample(const LatentDistribution& d, Rng& rng);
/// Appends n draws, row-major, into out.
void sample_into(const LatentDistribution& d, std::size_t n, Rng& rng, std::vector<double>& out);

double log_density(const LatentDistribution& d, std::span<const double> z);

/// One isotropic component per point; weights normalized, uniform when
/// absent.
MixtureDist make_latent_distribution(std::span<const LatentPoint> points,
                                     std::optional<std::vector<double>> weights,
                                     double sigma);

/// Value-returning append; the input mixture is untouched.
MixtureDist append_component(const MixtureDist& d, std::span<const double> z,
                             std::optional<double> raw_weight = std::nullopt);

/// One CSV row per point: label,z0,z1,...
void write_latent_csv(std::ostream& out, std::span<const std::string> labels,
                      std::span<const LatentPoint> points);

}  // namespace latentpass
