#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fixtures.hpp"
#include "latentpass/bench.hpp"
#include "latentpass/harness.hpp"
#include "oracles.hpp"

using namespace latentpass;

TEST(Split, SizesAndDisjointness) {
  std::vector<Password> pw;
  for (char32_t c = U'a'; c < U'a' + 10; ++c) pw.push_back(Password(1, c));
  const auto d = make_dataset(pw, Alphabet(U"abcdefghij"), 4);
  const auto [tr, te] = split(d, 0.8, 1);
  EXPECT_EQ(tr.unique_count(), 8u);
  EXPECT_EQ(te.unique_count(), 2u);
  EXPECT_THROW(split(d, 0.01, 1), Error);
  EXPECT_THROW(split(d, 1.0, 1), Error);
}

TEST(Split, TrainTestDisjointAndMassNearRatio) {
  SyntheticLeakOptions o;
  o.draws = 10000;
  const auto d = synthetic_leak(o);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto [tr, te] = split(d, 0.8, seed);
    std::unordered_set<Password> seen;
    for (const auto& e : tr.entries) seen.insert(e.password);
    for (const auto& e : te.entries) ASSERT_EQ(seen.count(e.password), 0u);
    EXPECT_EQ(tr.total_count() + te.total_count(), d.total_count());
    const double mass = static_cast<double>(tr.total_count()) / static_cast<double>(d.total_count());
    EXPECT_NEAR(mass, 0.8, 0.05) << "seed " << seed;
  }
}

TEST(Templates, WildcardCountMean) {
  Rng rng(1);
  const Password x = U"jimmy1991";
  EXPECT_EQ(derive_template(x, 0.0, rng).wildcard_count(), 0u);
  EXPECT_EQ(derive_template(x, 1.0, rng).wildcard_count(), 9u);
  double total = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) total += static_cast<double>(derive_template(x, 0.5, rng).wildcard_count());
  EXPECT_NEAR(total / n, 4.5, 0.05);
  EXPECT_THROW(derive_template(x, 1.5, rng), Error);
}

TEST(Classes, Presets) {
  const auto p = reference_classes();
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[0].lo, 1000u);
  EXPECT_EQ(p[0].hi, 15000u);
  EXPECT_EQ(p[3].hi, 5u);
  const auto s = scaled_classes(0.01);
  EXPECT_EQ(s[0].lo, 10u);
  EXPECT_EQ(s[2].lo, 1u);
  EXPECT_THROW(scaled_classes(0.0), Error);
}

TEST(TestSets, BuilderIsSoundAndComplete) {
  SyntheticLeakOptions o;
  o.draws = 20000;
  o.seed = 4;
  const auto xv = synthetic_leak(o);
  TestSetOptions opt;
  opt.per_class = 5;
  Rng rng(2);
  const auto c = build_biased_testsets(xv, opt, rng);
  ASSERT_FALSE(c.sets.empty());
  std::unordered_set<Template> uniq;
  for (const auto& s : c.sets) {
    EXPECT_GE(s.pattern.observed_count(), 4u);
    EXPECT_GE(s.pattern.wildcard_count(), 5u);
    EXPECT_TRUE(uniq.insert(s.pattern).second);
    std::vector<Password> rescan;
    for (const auto& e : xv.entries) {
      if (oracle::loop_matches(e.password, s.pattern)) rescan.push_back(e.password);
    }
    EXPECT_EQ(s.members, rescan);
    bool bounded = false;
    for (const auto& b : opt.classes) {
      if (b.name == s.class_label) bounded = s.members.size() >= b.lo && s.members.size() <= b.hi;
    }
    EXPECT_TRUE(bounded) << s.pattern.to_string();
  }
}

TEST(TestSets, UnfillableClassGetsDiagnostic) {
  const auto d = make_dataset({U"aaaaaaaaa", U"bbbbbbbbb"}, Alphabet(U"ab"), 10);
  TestSetOptions opt;
  opt.per_class = 1;
  opt.max_draws = 200;
  opt.classes = {{"huge", 1000, 2000}};
  Rng rng(1);
  const auto c = build_biased_testsets(d, opt, rng);
  EXPECT_TRUE(c.sets.empty());
  ASSERT_EQ(c.diagnostics.size(), 1u);
  EXPECT_NE(c.diagnostics[0].find("huge"), std::string::npos);
}

TEST(TestSets, WriteAndReadBack) {
  SyntheticLeakOptions o;
  o.draws = 5000;
  const auto xv = synthetic_leak(o);
  TestSetOptions opt;
  opt.per_class = 2;
  Rng rng(3);
  const auto c = build_biased_testsets(xv, opt, rng);
  ASSERT_FALSE(c.sets.empty());
  fixture::TempDir dir("testsets");
  write_testsets(dir.path(), c);
  const auto back = read_testset(dir / "t0000.txt", c.sets[0].class_label);
  EXPECT_EQ(back.pattern, c.sets[0].pattern);
  EXPECT_EQ(back.members, c.sets[0].members);
  std::ifstream index(dir / "index.csv");
  std::string header;
  std::getline(index, header);
  EXPECT_EQ(header, "file,class,template,size");
}

TEST(Attacks, StaticBudgetZeroAndRepeatable) {
  const auto& m = fixture::tiny_model();
  const auto target = fixture::small_leak().unique_passwords();
  Rng rng(1);
  EXPECT_TRUE(static_attack(m, target, 0, rng).empty());
  Rng a(4), b(4);
  const auto ta = static_attack(m, target, 3000, a);
  const auto tb = static_attack(m, target, 3000, b);
  EXPECT_EQ(ta.points().size(), tb.points().size());
  EXPECT_EQ(ta.final_matches(), tb.final_matches());
  EXPECT_TRUE(ta.well_formed());
}

TEST(Attacks, ModelBeatsUniformStrings) {
  const auto& m = fixture::tiny_model();
  const auto target = fixture::small_leak().unique_passwords();
  Rng a(5), b(5);
  const auto model = static_attack(m, target, 5000, a);
  const auto uniform = uniform_baseline_attack(m.config.alphabet, m.config.max_len, target, 5000, b);
  EXPECT_GT(model.final_matches(), uniform.final_matches());
  EXPECT_EQ(uniform.final_guesses(), 5000u);
}

TEST(Attacks, CpgEvaluationRows) {
  const auto& m = fixture::tiny_model();
  BiasedTestSet s;
  s.pattern = Template::parse("*****1");
  s.members = scan_matches(fixture::small_leak(), s.pattern);
  s.class_label = "rare";
  CpgEvalOptions opt;
  opt.budget = 2000;
  const std::vector<BiasedTestSet> sets = {s};
  const auto rows = evaluate_cpg(m, sets, opt);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].target_size, s.members.size());
  EXPECT_LE(rows[0].cpg_matches, rows[0].target_size);
  std::ostringstream out;
  write_cpg_eval_csv(out, rows);
  EXPECT_EQ(out.str().rfind("template,class,target_size,", 0), 0u);
  EXPECT_NE(out.str().find("\"*****1\",rare,"), std::string::npos);
}

TEST(Bloom, Geometry) {
  const DedupFilter f(1000000, 0.01);
  // m = ceil(1e6 * ln 100 / ln^2 2), k = round(m / n * ln 2).
  EXPECT_EQ(f.bit_count(), 9585059u);
  EXPECT_EQ(f.hash_count(), 7u);
  EXPECT_THROW(DedupFilter(0, 0.01), Error);
  EXPECT_THROW(DedupFilter(10, 1.0), Error);
}

TEST(Bloom, NoFalseNegatives) {
  DedupFilter f(5000, 0.01);
  for (int i = 0; i < 5000; ++i) f.insert("key" + std::to_string(i));
  for (int i = 0; i < 5000; ++i) ASSERT_TRUE(f.contains("key" + std::to_string(i)));
}

TEST(Bloom, AnalyticBoundMatchesClosedForm) {
  const auto f = DedupFilter::with_geometry(1000, 3);
  EXPECT_DOUBLE_EQ(f.false_positive_after(0), 0.0);
  const double p = std::pow(1.0 - std::exp(-3.0 * 100.0 / 1000.0), 3.0);
  EXPECT_NEAR(f.false_positive_after(100), p, 1e-15);
  double sum = 0.0;
  for (int i = 0; i < 50; ++i) sum += std::pow(1.0 - std::exp(-3.0 * i / 1000.0), 3.0);
  EXPECT_NEAR(f.expected_false_drops(50), sum, 1e-12);
}

TEST(Dedup, DropsRepeats) {
  DedupFilter f(100, 0.01);
  const std::vector<Password> in = {U"a", U"b", U"a", U"c"};
  DedupStats st;
  EXPECT_EQ(dedup_stream(in, f, &st), (std::vector<Password>{U"a", U"b", U"c"}));
  EXPECT_EQ(st.offered, 4u);
  EXPECT_EQ(st.emitted, 3u);
  EXPECT_EQ(st.dropped, 1u);
}

TEST(Dedup, SaturationWarnsOnce) {
  auto f = DedupFilter::with_geometry(64, 2);
  int warnings = 0;
  DedupStream s(f, [&](const std::string&) { ++warnings; });
  for (int i = 0; i < 200; ++i) s.offer_bytes(std::to_string(i));
  EXPECT_EQ(warnings, 1);
  EXPECT_TRUE(s.stats().saturation_warned);
}

TEST(Targets, AllDigitFilter) {
  EXPECT_TRUE(is_all_digits(U"0123"));
  EXPECT_FALSE(is_all_digits(U"12a"));
  EXPECT_FALSE(is_all_digits(U""));
  const auto d = make_dataset({U"12", U"a1", U"99"}, Alphabet(U"129a"), 4);
  EXPECT_EQ(filter_passwords(d, is_all_digits), (std::vector<Password>{U"12", U"99"}));
}

TEST(Synthetic, SeededAndValid) {
  SyntheticLeakOptions o;
  o.draws = 3000;
  const auto a = synthetic_leak(o);
  const auto b = synthetic_leak(o);
  ASSERT_EQ(a.unique_count(), b.unique_count());
  EXPECT_EQ(a.entries[0].password, b.entries[0].password);
  EXPECT_EQ(a.total_count(), 3000u);
  for (const auto& e : a.entries) ASSERT_TRUE(a.alphabet.valid_password(e.password, 10));
  EXPECT_EQ(a.alphabet.size(), 94u);
  o.draws = 0;
  EXPECT_THROW(synthetic_leak(o), Error);
}

TEST(Bench, SmokeRunReportsRates) {
  const auto& m = fixture::tiny_model();
  fixture::TempDir dir("bench");
  BenchOptions opt;
  opt.n = 10000;
  opt.sink = dir / "sink.txt";
  const auto raw = throughput_bench(m, opt);
  EXPECT_EQ(raw.guesses, 10000u);
  EXPECT_EQ(raw.emitted, 10000u);
  EXPECT_GT(raw.guesses_per_second, 0.0);
  opt.filtered = true;
  const auto filtered = throughput_bench(m, opt);
  EXPECT_LE(filtered.emitted, 10000u);
  EXPECT_NE(raw.to_json().find("\"guesses_per_second\""), std::string::npos);
}
