#pragma once

// Dynamic password guessing: sample from the prior until a hot-start number
// of target passwords is matched, then from an isotropic Gaussian mixture
// centered on the latent points of every match so far.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_set>
#include <vector>

#include "latentpass/cwae.hpp"
#include "latentpass/latent.hpp"
#include "latentpass/trace.hpp"

namespace latentpass {

/// Hot-start threshold: a fraction of the target size in (0, 1] or an
/// absolute match count.
struct HotStart {
  double value = 0.10;
  bool fraction = true;

  static HotStart of_fraction(double f) { return {f, true}; }
  static HotStart of_count(std::size_t n) { return {static_cast<double>(n), false}; }
  /// Parses "0.10", "10%" (fractions) or "250" (count).
  static HotStart parse(const std::string& text);
  /// ceil(fraction * target_size), at least 1.
  std::size_t resolve(std::size_t target_size) const;
  std::string to_string() const;
};

struct DpgConfig {
  HotStart alpha;
  double sigma = 0.35;
  std::uint64_t budget = 100000;
  bool dedup = false;            // when set, only first-time guesses count
  std::uint64_t trace_stride = 1000;
  std::size_t batch = 256;       // draws per distribution snapshot
  std::size_t threads = 1;
  std::uint64_t max_raw_factor = 64;  // dedup mode stops after budget * factor draws
  /// Mixture weight P(x) of a matched password; uniform when unset.
  std::function<double(const Password&)> weight_of;

  void validate() const;
};

/// Default covariate-shift setting: sigma = 0.35, alpha = 10%.
DpgConfig default_dpg_config();
/// Alternate hot-start preset, alpha = 15%.
DpgConfig alternate_dpg_config();

/// One sampling snapshot: every draw in [first_guess, next snapshot) came
/// from the distribution in force when the snapshot was taken.
struct PhaseRecord {
  std::uint64_t first_guess = 0;
  std::size_t matched_at_snapshot = 0;
  bool prior = true;
};

struct DpgState {
  std::vector<LatentPoint> latent_points;  // one per unique match
  std::vector<Password> matched;           // in hit order
  std::unordered_set<Password> remaining;
  LatentDistribution current = PriorDist{};
  std::size_t alpha = 0;
  std::uint64_t guesses = 0;
  std::uint64_t raw_draws = 0;
  std::optional<std::uint64_t> trigger_guess;
  std::size_t dropped_targets = 0;
  std::vector<PhaseRecord> phases;

  std::size_t component_count() const;
  /// Every snapshot taken with fewer than alpha matches used the prior.
  bool hot_start_respected() const;
};

struct AttackRun {
  AttackTrace trace;
  DpgState state;
};

/// Shared attack loop. With adaptive == false it is a static prior-sampling
/// attack that consumes randomness exactly like the adaptive one.
AttackRun guessing_attack(const ModelParams& m, std::span<const Password> target,
                          const DpgConfig& cfg, bool adaptive, Rng& rng);

AttackRun dpg_attack(const ModelParams& m, std::span<const Password> target,
                     const DpgConfig& cfg, Rng& rng);

struct SweepCell {
  HotStart alpha;
  double sigma = 0.0;
  std::vector<std::uint64_t> finals;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one seed
};

/// Full-factorial alpha x sigma runs, one per seed each.
std::vector<SweepCell> sweep_dpg(const ModelParams& m, std::span<const Password> target,
                                 std::span<const HotStart> alphas, std::span<const double> sigmas,
                                 const DpgConfig& base, std::span<const std::uint64_t> seeds);

/// Sigma grid of the reference bandwidth study.
std::vector<double> reference_sigma_grid();

void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells);

}  // namespace latentpass
