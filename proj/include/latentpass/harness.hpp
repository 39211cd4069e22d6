#pragma once

// Experiment scaffolding: dataset splits, biased template test sets, static
// and paired attacks, Bloom-filtered guess streams and result files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latentpass/cpg.hpp"
#include "latentpass/cwae.hpp"
#include "latentpass/dpg.hpp"
#include "latentpass/leak_io.hpp"
#include "latentpass/trace.hpp"

namespace latentpass {

// ---------------------------------------------------------------------------
// Splits and templates

/// Unique-password split: round(ratio * unique) passwords go to train, the
/// rest to test, with counts carried along.
std::pair<LeakDataset, LeakDataset> split(const LeakDataset& d, double ratio, std::uint64_t seed);

/// Independent per-position wildcard substitution with probability p.
Template derive_template(const Password& x, double p, Rng& rng);

// ---------------------------------------------------------------------------
// Biased test sets

struct ClassBounds {
  std::string name;
  std::size_t lo = 1;  // inclusive
  std::size_t hi = 1;  // inclusive
};

/// common [1000,15000], uncommon [50,150], rare [10,15], super-rare [1,5].
std::vector<ClassBounds> reference_classes();
/// Bounds sized for synthetic leaks of a few 10^4 passwords.
std::vector<ClassBounds> desk_classes();
/// Reference bounds times factor, each bound floored at 1.
std::vector<ClassBounds> scaled_classes(double factor);

struct BiasedTestSet {
  Template pattern;
  std::vector<Password> members;  // corpus order
  std::string class_label;
};

struct TestSetOptions {
  double p = 0.5;
  std::size_t per_class = 20;
  std::size_t max_draws = 200000;
  std::size_t min_observed = 4;
  std::size_t min_wildcards = 5;
  std::vector<ClassBounds> classes = desk_classes();

  void validate() const;
};

struct TestSetCollection {
  std::vector<BiasedTestSet> sets;        // grouped by class, class order
  std::vector<std::string> diagnostics;   // one per under-filled class
  std::size_t draws = 0;

  std::vector<const BiasedTestSet*> of_class(std::string_view label) const;
};

/// Rejection-samples templates from frequency-weighted corpus draws and
/// collects every unique corpus password matching each accepted template.
TestSetCollection build_biased_testsets(const LeakDataset& corpus, const TestSetOptions& options,
                                        Rng& rng);

/// Members of `corpus` matching t, in corpus order.
std::vector<Password> scan_matches(const LeakDataset& corpus, const Template& t);

/// One file per template (first line the template, then members) plus an
/// index.csv of (file, class, template, size).
void write_testsets(const std::filesystem::path& dir, const TestSetCollection& c);
BiasedTestSet read_testset(const std::filesystem::path& file, std::string class_label = "");

// ---------------------------------------------------------------------------
// Attacks

/// Prior-only sampling with first-hit match accounting.
AttackTrace static_attack(const ModelParams& m, std::span<const Password> target,
                          std::uint64_t budget, Rng& rng, std::size_t threads = 1);

/// Uniform random strings (length uniform in [1, L]) as a model-free baseline.
AttackTrace uniform_baseline_attack(const Alphabet& a, std::size_t max_len,
                                    std::span<const Password> target, std::uint64_t budget,
                                    Rng& rng);

struct CpgEvalRow {
  std::string template_text;
  std::string class_label;
  std::size_t target_size = 0;
  std::size_t cpg_matches = 0;
  std::size_t prior_matches = 0;
  std::size_t cpg_guesses = 0;
  double coherence_rate = 0.0;
};

struct CpgEvalOptions {
  std::uint64_t budget = 100000;  // raw samples per template, and for the prior stream
  double sigma = 0.8;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Paired comparison per test set: CPG at a raw budget against one shared
/// prior stream of the same size.
std::vector<CpgEvalRow> evaluate_cpg(const ModelParams& m, std::span<const BiasedTestSet> sets,
                                     const CpgEvalOptions& options);

void write_cpg_eval_csv(std::ostream& out, std::span<const CpgEvalRow> rows);

// ---------------------------------------------------------------------------
// Bloom-filtered deduplication

class DedupFilter {
 public:
  /// Sized for `expected` insertions at false-positive rate fp.
  DedupFilter(std::uint64_t expected, double fp);
  static DedupFilter with_geometry(std::uint64_t bits, std::uint32_t hashes);

  std::uint64_t bit_count() const { return bits_; }
  std::uint32_t hash_count() const { return hashes_; }
  std::uint64_t inserted() const { return inserted_; }
  std::uint64_t bits_set() const { return set_; }
  double saturation() const { return static_cast<double>(set_) / static_cast<double>(bits_); }

  bool contains(std::string_view key) const;
  /// Inserts key; returns false when it was (possibly falsely) present.
  bool insert(std::string_view key);

  /// Probability that a fresh key reads as present after i insertions.
  double false_positive_after(std::uint64_t i) const;
  /// Expected false drops over a stream of n distinct keys.
  double expected_false_drops(std::uint64_t n) const;

 private:
  DedupFilter() = default;
  std::pair<std::uint64_t, std::uint64_t> hash_pair(std::string_view key) const;

  std::uint64_t bits_ = 0;
  std::uint32_t hashes_ = 0;
  std::uint64_t inserted_ = 0;
  std::uint64_t set_ = 0;
  std::vector<std::uint64_t> words_;
};

struct DedupStats {
  std::uint64_t offered = 0;
  std::uint64_t emitted = 0;
  std::uint64_t dropped = 0;
  bool saturation_warned = false;
};

/// Streaming filter: offer() returns true when the guess should be emitted.
/// The warning callback fires once when more than half the bits are set.
class DedupStream {
 public:
  explicit DedupStream(DedupFilter& filter,
                       std::function<void(const std::string&)> on_warning = {})
      : filter_(filter), on_warning_(std::move(on_warning)) {}

  bool offer(const Password& x);
  bool offer_bytes(std::string_view key);
  const DedupStats& stats() const { return stats_; }

 private:
  DedupFilter& filter_;
  std::function<void(const std::string&)> on_warning_;
  DedupStats stats_;
  std::string scratch_;
};

std::vector<Password> dedup_stream(std::span<const Password> input, DedupFilter& filter,
                                   DedupStats* stats = nullptr,
                                   std::function<void(const std::string&)> on_warning = {});

// ---------------------------------------------------------------------------
// Target construction

/// Unique passwords of d satisfying pred, in corpus order.
std::vector<Password> filter_passwords(const LeakDataset& d,
                                       const std::function<bool(const Password&)>& pred);
bool is_all_digits(const Password& x);

}  // namespace latentpass
