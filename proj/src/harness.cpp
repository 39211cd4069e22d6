#include "latentpass/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace latentpass {

// ---------------------------------------------------------------------------
// Splits and templates

std::pair<LeakDataset, LeakDataset> split(const LeakDataset& d, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split: ratio must lie in (0, 1)");
  const std::size_t n = d.entries.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) throw Error("split: degenerate split of " + std::to_string(n) + " passwords");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

  LeakDataset train{d.source + ":train", d.alphabet, d.max_len, {}};
  LeakDataset test{d.source + ":test", d.alphabet, d.max_len, {}};
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).entries.push_back(d.entries[i]);
  return {std::move(train), std::move(test)};
}

Template derive_template(const Password& x, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("derive_template: p must lie in [0, 1]");
  return wildcard_each(x, p, rng);
}

// ---------------------------------------------------------------------------
// Class bounds

std::vector<ClassBounds> reference_classes() {
  return {{"common", 1000, 15000}, {"uncommon", 50, 150}, {"rare", 10, 15}, {"super-rare", 1, 5}};
}

std::vector<ClassBounds> desk_classes() {
  return {{"common", 100, 3000}, {"uncommon", 15, 40}, {"rare", 3, 6}, {"super-rare", 1, 2}};
}

std::vector<ClassBounds> scaled_classes(double factor) {
  if (!(factor > 0.0)) throw Error("scaled_classes: factor must be > 0");
  auto classes = reference_classes();
  for (auto& c : classes) {
    c.lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(c.lo) * factor)));
    c.hi = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(c.hi) * factor)));
  }
  return classes;
}

void TestSetOptions::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("testsets: p must lie in [0, 1]");
  if (per_class < 1) throw Error("testsets: per_class must be >= 1");
  if (classes.empty()) throw Error("testsets: no classes");
  for (const auto& c : classes) {
    if (c.lo < 1 || c.lo > c.hi) throw Error("testsets: bad bounds for class " + c.name);
  }
}

std::vector<const BiasedTestSet*> TestSetCollection::of_class(std::string_view label) const {
  std::vector<const BiasedTestSet*> out;
  for (const auto& s : sets) {
    if (s.class_label == label) out.push_back(&s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Test-set construction

std::vector<Password> scan_matches(const LeakDataset& corpus, const Template& t) {
  std::vector<Password> out;
  for (const auto& e : corpus.entries) {
    if (matches(e.password, t)) out.push_back(e.password);
  }
  return out;
}

TestSetCollection build_biased_testsets(const LeakDataset& corpus, const TestSetOptions& options,
                                        Rng& rng) {
  options.validate();
  if (corpus.entries.empty()) throw Error("testsets: empty corpus");

  // Frequency-weighted draws over unique passwords.
  std::vector<double> cumulative;
  cumulative.reserve(corpus.entries.size());
  double acc = 0.0;
  for (const auto& e : corpus.entries) cumulative.push_back(acc += static_cast<double>(e.count));

  // Candidate members bucketed by length; matching needs equal length.
  std::unordered_map<std::size_t, std::vector<const Password*>> by_length;
  for (const auto& e : corpus.entries) by_length[e.password.size()].push_back(&e.password);

  const std::size_t n_classes = options.classes.size();
  std::vector<std::vector<BiasedTestSet>> found(n_classes);
  std::unordered_set<Template> tried;
  std::uniform_real_distribution<double> unit(0.0, acc);

  TestSetCollection out;
  auto all_full = [&] {
    return std::all_of(found.begin(), found.end(),
                       [&](const auto& v) { return v.size() >= options.per_class; });
  };
  while (out.draws < options.max_draws && !all_full()) {
    ++out.draws;
    const auto pick = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), unit(rng)) - cumulative.begin());
    const Password& x = corpus.entries[std::min(pick, corpus.entries.size() - 1)].password;
    Template t = derive_template(x, options.p, rng);
    if (t.observed_count() < options.min_observed || t.wildcard_count() < options.min_wildcards) continue;
    if (!tried.insert(t).second) continue;

    std::size_t count = 0;
    for (const Password* y : by_length[t.size()]) count += matches(*y, t) ? 1 : 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const auto& b = options.classes[c];
      if (count < b.lo || count > b.hi || found[c].size() >= options.per_class) continue;
      found[c].push_back({t, scan_matches(corpus, t), b.name});
      break;
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (found[c].size() < options.per_class) {
      out.diagnostics.push_back("class " + options.classes[c].name + ": " +
                                std::to_string(found[c].size()) + " of " +
                                std::to_string(options.per_class) + " templates after " +
                                std::to_string(out.draws) + " draws");
    }
    for (auto& s : found[c]) out.sets.push_back(std::move(s));
  }
  return out;
}

void write_testsets(const std::filesystem::path& dir, const TestSetCollection& c) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.csv", std::ios::binary);
  if (!index) throw Error("cannot write " + (dir / "index.csv").string());
  index << "file,class,template,size\n";
  for (std::size_t i = 0; i < c.sets.size(); ++i) {
    const auto& s = c.sets[i];
    std::ostringstream name;
    name << "t" << std::setw(4) << std::setfill('0') << i << ".txt";
    std::ofstream f(dir / name.str(), std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name.str()).string());
    f << s.pattern.to_string() << '\n';
    for (const auto& x : s.members) f << u32_to_utf8(x) << '\n';
    std::string tmpl = s.pattern.to_string();
    std::string quoted = "\"";
    for (char ch : tmpl) quoted += (ch == '"') ? std::string("\"\"") : std::string(1, ch);
    quoted += '"';
    index << name.str() << ',' << s.class_label << ',' << quoted << ',' << s.members.size() << '\n';
  }
}

BiasedTestSet read_testset(const std::filesystem::path& file, std::string class_label) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty test-set file " + file.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  BiasedTestSet s;
  s.pattern = Template::parse(line);
  s.class_label = std::move(class_label);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    s.members.push_back(utf8_to_u32(line));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Attacks

AttackTrace static_attack(const ModelParams& m, std::span<const Password> target,
                          std::uint64_t budget, Rng& rng, std::size_t threads) {
  if (budget == 0) return AttackTrace(AttackMode::kStatic, 0, 0);
  DpgConfig cfg = default_dpg_config();
  cfg.budget = budget;
  cfg.threads = threads;
  return guessing_attack(m, target, cfg, false, rng).trace;
}

AttackTrace uniform_baseline_attack(const Alphabet& a, std::size_t max_len,
                                    std::span<const Password> target, std::uint64_t budget,
                                    Rng& rng) {
  AttackTrace trace(AttackMode::kStatic, budget, 0);
  if (budget == 0) return trace;
  std::unordered_set<Password> remaining(target.begin(), target.end());
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, a.size() - 1);
  std::uint64_t hits = 0;
  Password x;
  for (std::uint64_t g = 1; g <= budget; ++g) {
    x.resize(len(rng));
    for (auto& c : x) c = a.symbol(sym(rng));
    if (remaining.erase(x) > 0) {
      trace.record(g, ++hits);
    } else if (g % 1000 == 0) {
      trace.record(g, hits);
    }
  }
  trace.record(budget, hits);
  return trace;
}

std::vector<CpgEvalRow> evaluate_cpg(const ModelParams& m, std::span<const BiasedTestSet> sets,
                                     const CpgEvalOptions& options) {
  if (options.budget < 1) throw Error("eval-cpg: budget must be >= 1");

  // Shared prior stream, stream index 0; template i uses stream i + 1.
  std::unordered_set<Password> prior;
  {
    Rng rng(stream_seed(options.seed, 0));
    const LatentDistribution dist = PriorDist{m.config.latent_dim};
    std::vector<double> rows;
    for (std::uint64_t done = 0; done < options.budget;) {
      const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(4096, options.budget - done));
      rows.clear();
      sample_into(dist, n, rng, rows);
      for (auto& x : generate_batch(m, rows, options.threads)) prior.insert(std::move(x));
      done += n;
    }
  }

  std::vector<CpgEvalRow> rows;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& s = sets[i];
    CpgRequest req;
    req.pattern = s.pattern;
    req.n = static_cast<std::size_t>(options.budget);
    req.max_attempts = static_cast<std::size_t>(options.budget);
    req.sigma = options.sigma;
    req.threads = options.threads;
    Rng rng(stream_seed(options.seed, i + 1));
    const CpgResult r = cpg_attack(m, req, rng);
    const std::unordered_set<Password> guessed(r.guesses.begin(), r.guesses.end());

    CpgEvalRow row;
    row.template_text = s.pattern.to_string();
    row.class_label = s.class_label;
    row.target_size = s.members.size();
    row.cpg_guesses = r.guesses.size();
    row.coherence_rate = r.coherence_rate;
    for (const auto& x : s.members) {
      row.cpg_matches += guessed.count(x);
      row.prior_matches += prior.count(x);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_cpg_eval_csv(std::ostream& out, std::span<const CpgEvalRow> rows) {
  out << "template,class,target_size,cpg_matches,prior_matches,cpg_guesses,coherence_rate\n";
  for (const auto& r : rows) {
    std::string quoted = "\"";
    for (char ch : r.template_text) quoted += (ch == '"') ? std::string("\"\"") : std::string(1, ch);
    quoted += '"';
    std::ostringstream line;
    line << quoted << ',' << r.class_label << ',' << r.target_size << ',' << r.cpg_matches << ','
         << r.prior_matches << ',' << r.cpg_guesses << ',' << std::setprecision(9)
         << r.coherence_rate;
    out << line.str() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Bloom filter

DedupFilter::DedupFilter(std::uint64_t expected, double fp) {
  if (expected < 1) throw Error("bloom: expected insertions must be >= 1");
  if (!(fp > 0.0 && fp < 1.0)) throw Error("bloom: fp rate must lie in (0, 1)");
  const double ln2 = std::log(2.0);
  const double m = std::ceil(-static_cast<double>(expected) * std::log(fp) / (ln2 * ln2));
  bits_ = std::max<std::uint64_t>(64, static_cast<std::uint64_t>(m));
  hashes_ = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::lround(static_cast<double>(bits_) / static_cast<double>(expected) * ln2)));
  words_.assign((bits_ + 63) / 64, 0);
}

DedupFilter DedupFilter::with_geometry(std::uint64_t bits, std::uint32_t hashes) {
  if (bits < 1 || hashes < 1) throw Error("bloom: bits and hashes must be >= 1");
  DedupFilter f;
  f.bits_ = bits;
  f.hashes_ = hashes;
  f.words_.assign((bits + 63) / 64, 0);
  return f;
}

std::pair<std::uint64_t, std::uint64_t> DedupFilter::hash_pair(std::string_view key) const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  const std::uint64_t h1 = splitmix64(h);
  const std::uint64_t h2 = splitmix64(h1 ^ 0x5851F42D4C957F2Dull) | 1ull;
  return {h1, h2};
}

bool DedupFilter::contains(std::string_view key) const {
  auto [h1, h2] = hash_pair(key);
  for (std::uint32_t i = 0; i < hashes_; ++i) {
    const std::uint64_t bit = (h1 + i * h2) % bits_;
    if ((words_[bit >> 6] & (1ull << (bit & 63))) == 0) return false;
  }
  return true;
}

bool DedupFilter::insert(std::string_view key) {
  auto [h1, h2] = hash_pair(key);
  bool fresh = false;
  for (std::uint32_t i = 0; i < hashes_; ++i) {
    const std::uint64_t bit = (h1 + i * h2) % bits_;
    auto& w = words_[bit >> 6];
    const std::uint64_t mask = 1ull << (bit & 63);
    if ((w & mask) == 0) {
      w |= mask;
      ++set_;
      fresh = true;
    }
  }
  if (fresh) ++inserted_;
  return fresh;
}

double DedupFilter::false_positive_after(std::uint64_t i) const {
  const double k = hashes_;
  return std::pow(1.0 - std::exp(-k * static_cast<double>(i) / static_cast<double>(bits_)), k);
}

double DedupFilter::expected_false_drops(std::uint64_t n) const {
  double total = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) total += false_positive_after(i);
  return total;
}

bool DedupStream::offer_bytes(std::string_view key) {
  ++stats_.offered;
  const bool fresh = filter_.insert(key);
  if (fresh) {
    ++stats_.emitted;
  } else {
    ++stats_.dropped;
  }
  if (!stats_.saturation_warned && filter_.saturation() > 0.5) {
    stats_.saturation_warned = true;
    if (on_warning_) {
      on_warning_("dedup filter saturated: " + std::to_string(filter_.bits_set()) + " of " +
                  std::to_string(filter_.bit_count()) + " bits set");
    }
  }
  return fresh;
}

bool DedupStream::offer(const Password& x) {
  scratch_ = u32_to_utf8(x);
  return offer_bytes(scratch_);
}

std::vector<Password> dedup_stream(std::span<const Password> input, DedupFilter& filter,
                                   DedupStats* stats,
                                   std::function<void(const std::string&)> on_warning) {
  DedupStream stream(filter, std::move(on_warning));
  std::vector<Password> out;
  for (const auto& x : input) {
    if (stream.offer(x)) out.push_back(x);
  }
  if (stats) *stats = stream.stats();
  return out;
}

// ---------------------------------------------------------------------------
// Targets

std::vector<Password> filter_passwords(const LeakDataset& d,
                                       const std::function<bool(const Password&)>& pred) {
  std::vector<Password> out;
  for (const auto& e : d.entries) {
    if (pred(e.password)) out.push_back(e.password);
  }
  return out;
}

bool is_all_digits(const Password& x) {
  return !x.empty() && std::all_of(x.begin(), x.end(), [](char32_t c) { return c >= U'0' && c <= U'9'; });
}

}  // namespace latentpass
