#include "latentpass/dpg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace latentpass {

// ---------------------------------------------------------------------------
// AttackTrace

std::string to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::kStatic: return "static";
    case AttackMode::kCpg: return "cpg";
    case AttackMode::kDpg: return "dpg";
  }
  return "unknown";
}

void AttackTrace::record(std::uint64_t guess_index, std::uint64_t matches) {
  if (!points_.empty()) {
    auto& last = points_.back();
    if (guess_index < last.guess_index || matches < last.matches) {
      throw Error("trace: points must be monotone");
    }
    if (guess_index == last.guess_index) {
      last.matches = matches;
      return;
    }
  }
  points_.push_back({guess_index, matches});
}

std::uint64_t AttackTrace::matches_at(std::uint64_t guesses) const {
  std::uint64_t m = 0;
  for (const auto& p : points_) {
    if (p.guess_index > guesses) break;
    m = p.matches;
  }
  return m;
}

bool AttackTrace::well_formed() const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].guess_index == 0 || points_[i].guess_index > budget_) return false;
    if (i > 0 && (points_[i].guess_index <= points_[i - 1].guess_index ||
                  points_[i].matches < points_[i - 1].matches)) {
      return false;
    }
  }
  return true;
}

void AttackTrace::write_csv(std::ostream& out) const {
  out << "guess_index,matches\n";
  for (const auto& p : points_) out << p.guess_index << ',' << p.matches << '\n';
}

// ---------------------------------------------------------------------------
// Configuration

HotStart HotStart::parse(const std::string& text) {
  if (text.empty()) throw Error("alpha: empty value");
  try {
    std::size_t used = 0;
    if (text.back() == '%') {
      const double pct = std::stod(text.substr(0, text.size() - 1), &used);
      if (used != text.size() - 1) throw Error("alpha: bad value " + text);
      return of_fraction(pct / 100.0);
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw Error("alpha: bad value " + text);
    if (v > 0.0 && v <= 1.0 && text.find('.') != std::string::npos) return of_fraction(v);
    if (v >= 1.0 && std::floor(v) == v) return of_count(static_cast<std::size_t>(v));
  } catch (const std::logic_error&) {
  }
  throw Error("alpha: bad value " + text);
}

std::size_t HotStart::resolve(std::size_t target_size) const {
  if (!fraction) return std::max<std::size_t>(1, static_cast<std::size_t>(value));
  const double n = std::ceil(value * static_cast<double>(target_size) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

std::string HotStart::to_string() const {
  std::ostringstream os;
  if (fraction) {
    os << value;
  } else {
    os << static_cast<std::uint64_t>(value);
  }
  return os.str();
}

void DpgConfig::validate() const {
  if (!(sigma > 0.0)) throw Error("dpg: sigma must be > 0");
  if (budget < 1) throw Error("dpg: budget must be >= 1");
  if (alpha.fraction && !(alpha.value > 0.0 && alpha.value <= 1.0)) {
    throw Error("dpg: fractional alpha must lie in (0, 1]");
  }
  if (!alpha.fraction && alpha.value < 1.0) throw Error("dpg: alpha count must be >= 1");
  if (batch < 1) throw Error("dpg: batch must be >= 1");
  if (trace_stride < 1) throw Error("dpg: trace_stride must be >= 1");
}

DpgConfig default_dpg_config() {
  DpgConfig c;
  c.alpha = HotStart::of_fraction(0.10);
  c.sigma = 0.35;
  return c;
}

DpgConfig alternate_dpg_config() {
  DpgConfig c = default_dpg_config();
  c.alpha = HotStart::of_fraction(0.15);
  return c;
}

std::vector<double> reference_sigma_grid() { return {0.15, 0.35, 0.8}; }

// ---------------------------------------------------------------------------
// State

std::size_t DpgState::component_count() const {
  if (const auto* mix = std::get_if<MixtureDist>(&current)) return mix->size();
  return 0;
}

bool DpgState::hot_start_respected() const {
  return std::all_of(phases.begin(), phases.end(), [&](const PhaseRecord& p) {
    return p.matched_at_snapshot >= alpha || p.prior;
  });
}

// ---------------------------------------------------------------------------
// Attack loop

AttackRun guessing_attack(const ModelParams& m, std::span<const Password> target,
                          const DpgConfig& cfg, bool adaptive, Rng& rng) {
  cfg.validate();
  if (target.empty()) throw Error("attack: empty target set");
  const auto& mc = m.config;

  AttackRun run;
  run.trace = AttackTrace(adaptive ? AttackMode::kDpg : AttackMode::kStatic, cfg.budget, 0);
  DpgState& st = run.state;
  for (const auto& x : target) {
    if (mc.alphabet.valid_password(x, mc.max_len)) {
      st.remaining.insert(x);
    } else {
      ++st.dropped_targets;
    }
  }
  if (st.remaining.empty()) throw Error("attack: no target password fits the model");
  st.alpha = cfg.alpha.resolve(st.remaining.size());
  st.current = PriorDist{mc.latent_dim};

  std::unordered_set<Password> seen;
  const std::uint64_t raw_cap =
      cfg.dedup ? cfg.budget * std::max<std::uint64_t>(1, cfg.max_raw_factor) : cfg.budget;
  std::vector<double> rows;

  while (st.guesses < cfg.budget && st.raw_draws < raw_cap) {
    std::size_t want = cfg.batch;
    if (!cfg.dedup) want = static_cast<std::size_t>(std::min<std::uint64_t>(want, cfg.budget - st.guesses));
    want = static_cast<std::size_t>(std::min<std::uint64_t>(want, raw_cap - st.raw_draws));
    st.phases.push_back({st.guesses + 1, st.matched.size(), is_prior(st.current)});
    rows.clear();
    sample_into(st.current, want, rng, rows);
    const auto guesses = generate_batch(m, rows, cfg.threads);

    for (std::size_t i = 0; i < guesses.size() && st.guesses < cfg.budget; ++i) {
      ++st.raw_draws;
      const Password& x = guesses[i];
      if (cfg.dedup && !seen.insert(x).second) continue;
      ++st.guesses;
      if (st.remaining.erase(x) > 0) {
        const std::span<const double> z(rows.data() + i * mc.latent_dim, mc.latent_dim);
        st.matched.push_back(x);
        st.latent_points.emplace_back(z.begin(), z.end());
        if (adaptive && st.matched.size() >= st.alpha) {
          if (st.matched.size() == st.alpha) {
            std::optional<std::vector<double>> weights;
            if (cfg.weight_of) {
              weights.emplace();
              for (const auto& p : st.matched) weights->push_back(cfg.weight_of(p));
            }
            st.current = make_latent_distribution(st.latent_points, weights, cfg.sigma);
            st.trigger_guess = st.guesses;
          } else {
            std::get<MixtureDist>(st.current)
                .append(z, cfg.weight_of ? std::optional<double>(cfg.weight_of(x)) : std::nullopt);
          }
        }
        run.trace.record(st.guesses, st.matched.size());
      } else if (st.guesses % cfg.trace_stride == 0) {
        run.trace.record(st.guesses, st.matched.size());
      }
    }
  }
  if (st.guesses > 0) run.trace.record(st.guesses, st.matched.size());
  return run;
}

AttackRun dpg_attack(const ModelParams& m, std::span<const Password> target, const DpgConfig& cfg,
                     Rng& rng) {
  return guessing_attack(m, target, cfg, true, rng);
}

std::vector<SweepCell> sweep_dpg(const ModelParams& m, std::span<const Password> target,
                                 std::span<const HotStart> alphas, std::span<const double> sigmas,
                                 const DpgConfig& base, std::span<const std::uint64_t> seeds) {
  if (alphas.empty() || sigmas.empty() || seeds.empty()) throw Error("sweep: empty grid");
  std::vector<SweepCell> cells;
  for (const auto& alpha : alphas) {
    for (double sigma : sigmas) {
      SweepCell cell;
      cell.alpha = alpha;
      cell.sigma = sigma;
      DpgConfig cfg = base;
      cfg.alpha = alpha;
      cfg.sigma = sigma;
      for (std::uint64_t seed : seeds) {
        Rng rng(seed);
        cell.finals.push_back(dpg_attack(m, target, cfg, rng).trace.final_matches());
      }
      const double n = static_cast<double>(cell.finals.size());
      cell.mean = std::accumulate(cell.finals.begin(), cell.finals.end(), 0.0) / n;
      if (cell.finals.size() > 1) {
        double ss = 0.0;
        for (auto f : cell.finals) ss += (static_cast<double>(f) - cell.mean) * (static_cast<double>(f) - cell.mean);
        cell.stddev = std::sqrt(ss / (n - 1.0));
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells) {
  out << "alpha,sigma,seeds,mean_matches,stddev_matches\n";
  for (const auto& c : cells) {
    std::ostringstream row;
    row << std::setprecision(10) << c.alpha.to_string() << ',' << c.sigma << ',' << c.finals.size()
        << ',' << c.mean << ',' << c.stddev;
    out << row.str() << '\n';
  }
}

}  // namespace latentpass
