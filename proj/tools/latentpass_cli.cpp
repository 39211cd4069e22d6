// latentpass command-line driver.
//
// Every subcommand resolves and validates its whole configuration (flags,
// optional --config JSON, preset) and loads its inputs before the first
// output file is written. Result files are CSV; each run also leaves a
// <output>.manifest.json with the resolved configuration and input hashes.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latentpass/bench.hpp"
#include "latentpass/cpg.hpp"
#include "latentpass/cwae.hpp"
#include "latentpass/dpg.hpp"
#include "latentpass/harness.hpp"
#include "latentpass/latent.hpp"
#include "latentpass/leak_io.hpp"
#include "latentpass/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace latentpass;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kBadConfig = 4,
  kBadData = 5,
};

struct CliError : std::runtime_error {
  CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

[[noreturn]] void fail(int code, const std::string& what) { throw CliError(code, what); }

// ---------------------------------------------------------------------------
// Shared options and helpers

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string preset = "desk";
  std::string out_dir = ".";
  std::string config;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed; all randomness derives from it");
  app->add_option("--threads", c.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  app->add_option("--preset", c.preset, "Configuration preset")->check(CLI::IsMember({"desk", "reference"}));
  app->add_option("--out-dir", c.out_dir,
                  "Output directory (LATENTPASS_OUTPUT_DIR overrides it)");
  app->add_option("--config", c.config, "JSON file supplying any flag of this subcommand");
}

fs::path output_dir(const Common& c) {
  if (const char* env = std::getenv("LATENTPASS_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return fs::path(c.out_dir);
}

fs::path resolve_output(const Common& c, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : output_dir(c) / p;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) fail(kUsage, what + " is required");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(kMissingFile, what + " not found: " + path);
}

void require_dir(const std::string& path, const std::string& what) {
  std::error_code ec;
  if (!fs::is_directory(path, ec)) fail(kMissingFile, what + " not found: " + path);
}

/// Runs f, mapping library validation errors to the config exit code.
template <class F>
void validated(F&& f) {
  try {
    f();
  } catch (const CliError&) {
    throw;
  } catch (const Error& e) {
    fail(kBadConfig, e.what());
  }
}

ModelParams load_model(const std::string& path) {
  require_file(path, "model checkpoint");
  try {
    return load_checkpoint(path);
  } catch (const CheckpointError& e) {
    const bool config = e.kind() == CheckpointError::Kind::kConfigMismatch ||
                        e.kind() == CheckpointError::Kind::kAlphabetMismatch;
    fail(config ? kBadConfig : kBadData, e.what());
  }
}

LeakDataset load_leak(const std::string& path, const LeakReadOptions& options) {
  require_file(path, "corpus");
  LeakReadStats stats;
  LeakDataset d;
  try {
    d = read_leak_file(path, options, &stats);
  } catch (const Error& e) {
    fail(kBadData, e.what());
  }
  if (stats.skipped() > 0) {
    std::cerr << "warning: " << path << ": skipped " << stats.skipped() << " of " << stats.lines
              << " lines (" << stats.skipped_over_length << " over-length, "
              << stats.skipped_alphabet << " outside alphabet, " << stats.skipped_malformed
              << " malformed)\n";
  }
  if (d.entries.empty()) fail(kBadData, "no usable passwords in " + path);
  return d;
}

std::vector<Password> load_target(const std::string& path, const ModelParams& m) {
  LeakReadOptions o;
  o.max_len = m.config.max_len;
  o.alphabet = m.config.alphabet;
  return load_leak(path, o).unique_passwords();
}

void prepare_output(const fs::path& file) {
  std::error_code ec;
  if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
  if (ec) fail(kFailure, "cannot create " + file.parent_path().string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& file) {
  prepare_output(file);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(kFailure, "cannot write " + file.string());
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Manifest written beside the primary output.
class Manifest {
 public:
  Manifest(std::string command, const Common& c) {
    j_["tool"] = "latentpass";
    j_["version"] = kVersion;
    j_["command"] = std::move(command);
    j_["seed"] = c.seed;
    j_["preset"] = c.preset;
    j_["threads"] = c.threads;
    j_["config"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["results"] = json::object();
  }
  json& config() { return j_["config"]; }
  json& results() { return j_["results"]; }
  void input(const std::string& role, const fs::path& p) {
    json e;
    e["role"] = role;
    e["path"] = p.string();
    e["hash"] = file_hash(p);
    j_["inputs"].push_back(e);
  }
  void model(const fs::path& p) {
    j_["model_hash"] = file_hash(p);
    input("model", p);
  }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void write(const fs::path& primary) {
    j_["created_utc"] = utc_now();
    auto out = open_output(fs::path(primary.string() + ".manifest.json"));
    out << j_.dump(2) << '\n';
  }

 private:
  json j_;
};

std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(kBadConfig, what + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) fail(kBadConfig, what + ": empty list");
  return out;
}

void write_passwords(std::ostream& out, const std::vector<Password>& xs) {
  for (const auto& x : xs) out << u32_to_utf8(x) << '\n';
}

// ---------------------------------------------------------------------------
// --config support: JSON keys become long flags placed right after the
// subcommand name, so explicit command-line flags (parsed later) win.

std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  require_file(*path, "config file");
  json cfg;
  try {
    std::ifstream in(*path);
    cfg = json::parse(in);
  } catch (const std::exception& e) {
    fail(kBadConfig, "config file " + *path + ": " + e.what());
  }
  if (!cfg.is_object()) fail(kBadConfig, "config file " + *path + ": expected a JSON object");

  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") fail(kBadConfig, "config file may not name another config file");
    if (given.count(key) != 0) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
    } else if (value.is_string()) {
      injected.push_back("--" + key);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      injected.push_back("--" + key);
      injected.push_back(value.dump());
    } else if (value.is_number_float()) {
      std::ostringstream os;
      os << std::setprecision(17) << value.get<double>();
      injected.push_back("--" + key);
      injected.push_back(os.str());
    } else {
      fail(kBadConfig, "config key " + key + ": unsupported value type");
    }
  }
  if (args.size() < 2) fail(kUsage, "--config needs a subcommand");
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

// ---------------------------------------------------------------------------
// Subcommands

struct MakeCorpusArgs {
  Common c;
  std::size_t draws = 60000;
  std::size_t max_len = 10;
  std::string out = "leak.txt";
};

int run_make_corpus(const MakeCorpusArgs& a) {
  SyntheticLeakOptions o;
  o.draws = a.draws;
  o.max_len = a.max_len;
  o.seed = a.c.seed;
  LeakDataset d;
  validated([&] { d = synthetic_leak(o); });
  const fs::path out = resolve_output(a.c, a.out);
  {
    auto f = open_output(out);
    write_leak(f, d);
  }
  Manifest man("make-corpus", a.c);
  man.config()["draws"] = a.draws;
  man.config()["max_len"] = a.max_len;
  man.output(out);
  man.results()["unique"] = d.unique_count();
  man.results()["total"] = d.total_count();
  man.write(out);
  std::cerr << "wrote " << d.unique_count() << " unique passwords (" << d.total_count()
            << " occurrences) to " << out.string() << '\n';
  return kOk;
}

struct TrainArgs {
  Common c;
  std::string corpus;
  std::string out = "model.ckpt";
  std::string resume;
  std::optional<std::size_t> epochs;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::optional<double> lr;
  std::optional<double> lr_decay;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> latent_dim;
  std::optional<std::size_t> max_len;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> blocks;
  std::string noise = "char";
  std::size_t span_k = 5;
};

int run_train(const TrainArgs& a) {
  const bool reference = a.c.preset == "reference";
  TrainHyper h = reference ? reference_train_hyper() : desk_train_hyper();
  if (a.epochs) h.epochs = *a.epochs;
  if (a.epsilon) h.epsilon = *a.epsilon;
  if (a.lambda) h.lambda = *a.lambda;
  if (a.lr) h.lr = *a.lr;
  if (a.lr_decay) h.lr_decay = *a.lr_decay;
  if (a.batch) h.batch = *a.batch;
  h.noise = a.noise == "span" ? NoiseMode::kMaskedSpan : NoiseMode::kPerCharacter;
  h.span_k = a.span_k;
  h.seed = a.c.seed;
  validated([&] { h.validate(); });

  ModelParams m;
  LeakDataset data;
  if (!a.resume.empty()) {
    if (a.latent_dim || a.max_len || a.hidden || a.blocks) {
      fail(kBadConfig, "--resume takes the architecture from the checkpoint; drop --latent-dim/--max-len/--hidden/--blocks");
    }
    m = load_model(a.resume);
    if (m.config.input_smoothing != h.smoothing) fail(kBadConfig, "checkpoint smoothing differs from the preset");
    LeakReadOptions ro;
    ro.max_len = m.config.max_len;
    ro.alphabet = m.config.alphabet;
    data = load_leak(a.corpus, ro);
  } else {
    LeakReadOptions ro;
    ro.max_len = a.max_len.value_or(reference ? 16 : 10);
    data = load_leak(a.corpus, ro);
    ModelConfig cfg = reference ? reference_model_config(data.alphabet) : desk_model_config(data.alphabet);
    if (a.latent_dim) cfg.latent_dim = *a.latent_dim;
    if (a.max_len) cfg.max_len = *a.max_len;
    if (a.hidden) cfg.hidden = *a.hidden;
    if (a.blocks) cfg.blocks = *a.blocks;
    cfg.seed = a.c.seed;
    cfg.input_smoothing = h.smoothing;
    validated([&] { m = init_model(cfg); });
  }

  const fs::path ckpt = resolve_output(a.c, a.out);
  const fs::path loss_csv = fs::path(ckpt.string() + ".loss.csv");
  prepare_output(ckpt);
  const auto samples = data.expanded();
  std::cerr << "training on " << data.unique_count() << " unique / " << samples.size()
            << " total passwords, " << h.epochs << " epochs\n";
  TrainOptions opt;
  opt.checkpoint = ckpt;
  opt.on_epoch = [](const EpochLoss& e) {
    std::cerr << "epoch " << e.epoch << " recon " << e.mean.reconstruction << " mmd "
              << e.mean.mmd << " total " << e.mean.total << '\n';
  };
  train(m, samples, h, opt);
  save_checkpoint(m, ckpt);

  {
    auto f = open_output(loss_csv);
    f << "epoch,reconstruction,mmd,total\n";
    for (const auto& e : m.history) {
      std::ostringstream row;
      row << std::setprecision(10) << e.epoch << ',' << e.mean.reconstruction << ','
          << e.mean.mmd << ',' << e.mean.total;
      f << row.str() << '\n';
    }
  }
  const double rt = roundtrip_accuracy(m, samples);
  Manifest man("train", a.c);
  auto& cfg = man.config();
  cfg["epochs"] = h.epochs;
  cfg["epsilon"] = h.epsilon;
  cfg["lambda"] = h.lambda;
  cfg["lr"] = h.lr;
  cfg["lr_decay"] = h.lr_decay;
  cfg["batch"] = h.batch;
  cfg["smoothing"] = h.smoothing;
  cfg["noise"] = a.noise;
  cfg["latent_dim"] = m.config.latent_dim;
  cfg["max_len"] = m.config.max_len;
  cfg["hidden"] = m.config.hidden;
  cfg["blocks"] = m.config.blocks;
  man.input("corpus", a.corpus);
  if (!a.resume.empty()) man.input("resume", a.resume);
  man.output(ckpt);
  man.output(loss_csv);
  man.results()["model_hash"] = file_hash(ckpt);
  man.results()["roundtrip_accuracy"] = rt;
  man.results()["epochs_seen"] = m.epochs_seen();
  man.write(ckpt);
  std::cerr << "roundtrip accuracy " << rt << "; wrote " << ckpt.string() << '\n';
  return kOk;
}

struct SampleArgs {
  Common c;
  std::string model;
  std::uint64_t n = 1000;
  std::string pivot;
  double sigma = 0.1;
  std::string out = "samples.txt";
};

int run_sample(const SampleArgs& a) {
  const ModelParams m = load_model(a.model);
  if (a.n < 1) fail(kBadConfig, "--n must be >= 1");
  LatentDistribution dist = PriorDist{m.config.latent_dim};
  if (!a.pivot.empty()) {
    if (!(a.sigma > 0.0)) fail(kBadConfig, "--sigma must be > 0");
    const Template t = Template::parse(a.pivot);
    if (t.size() > m.config.max_len) fail(kBadConfig, "pivot longer than the model's max length");
    for (char32_t c : t.cells()) {
      if (c != kWildcardSymbol && !m.config.alphabet.contains(c)) fail(kBadConfig, "pivot uses symbols outside the model alphabet");
    }
    dist = PivotDist{encode_latent(m, t), a.sigma};
  }
  const fs::path out = resolve_output(a.c, a.out);
  Rng rng(a.c.seed);
  std::vector<double> rows;
  sample_into(dist, a.n, rng, rows);
  const auto xs = generate_batch(m, rows, a.c.threads);
  {
    auto f = open_output(out);
    write_passwords(f, xs);
  }
  Manifest man("sample", a.c);
  man.model(a.model);
  man.config()["n"] = a.n;
  man.config()["pivot"] = a.pivot;
  man.config()["sigma"] = a.sigma;
  man.output(out);
  man.write(out);
  return kOk;
}

struct CpgArgs {
  Common c;
  std::string model;
  std::string tmpl;
  std::size_t n = 1000;
  std::optional<double> sigma;
  std::optional<std::size_t> max_attempts;
  bool keep_duplicates = false;
  std::string out = "cpg.txt";
};

int run_cpg(const CpgArgs& a) {
  const ModelParams m = load_model(a.model);
  CpgRequest req;
  validated([&] {
    req.pattern = Template::parse(a.tmpl);
    if (a.c.preset == "reference") req = reference_cpg_request(req.pattern, a.n);
    req.n = a.n;
    if (a.sigma) req.sigma = *a.sigma;
    req.max_attempts = a.max_attempts.value_or(std::max<std::size_t>(100000, req.n));
    req.dedup = !a.keep_duplicates;
    req.threads = a.c.threads;
    req.validate();
    if (req.pattern.size() > m.config.max_len) throw Error("template longer than the model's max length");
    for (char32_t ch : req.pattern.cells()) {
      if (ch != kWildcardSymbol && !m.config.alphabet.contains(ch)) throw Error("template uses symbols outside the model alphabet");
    }
  });
  const fs::path out = resolve_output(a.c, a.out);
  Rng rng(a.c.seed);
  const CpgResult r = cpg_attack(m, req, rng);
  {
    auto f = open_output(out);
    write_passwords(f, r.guesses);
  }
  if (!r.diagnostic.empty()) std::cerr << "note: " << r.diagnostic << '\n';
  Manifest man("cpg", a.c);
  man.model(a.model);
  man.config()["template"] = a.tmpl;
  man.config()["n"] = req.n;
  man.config()["sigma"] = req.sigma;
  man.config()["max_attempts"] = req.max_attempts;
  man.config()["dedup"] = req.dedup;
  man.output(out);
  man.results()["guesses"] = r.guesses.size();
  man.results()["attempts_used"] = r.attempts_used;
  man.results()["coherence_rate"] = r.coherence_rate;
  man.results()["diagnostic"] = r.diagnostic;
  man.write(out);
  std::cerr << r.guesses.size() << " guesses (coherence " << r.coherence_rate << ")\n";
  return kOk;
}

struct AttackArgs {
  Common c;
  std::string model;
  std::string target;
  std::string alpha = "0.10";
  double sigma = 0.35;
  std::uint64_t budget = 100000;
  std::uint64_t stride = 1000;
  bool dedup = false;
  std::string out = "trace.csv";
};

DpgConfig attack_config(const AttackArgs& a) {
  DpgConfig cfg = default_dpg_config();
  validated([&] {
    cfg.alpha = HotStart::parse(a.alpha);
    cfg.sigma = a.sigma;
    cfg.budget = a.budget;
    cfg.trace_stride = a.stride;
    cfg.dedup = a.dedup;
    cfg.threads = a.c.threads;
    cfg.validate();
  });
  return cfg;
}

int run_attack(const AttackArgs& a, bool adaptive) {
  const ModelParams m = load_model(a.model);
  const DpgConfig cfg = attack_config(a);
  const auto target = load_target(a.target, m);
  const fs::path out = resolve_output(a.c, a.out);
  Rng rng(a.c.seed);
  AttackRun run = guessing_attack(m, target, cfg, adaptive, rng);
  run.trace.set_seed(a.c.seed);
  {
    auto f = open_output(out);
    run.trace.write_csv(f);
  }
  Manifest man(adaptive ? "dpg" : "static", a.c);
  man.model(a.model);
  man.input("target", a.target);
  if (adaptive) {
    man.config()["alpha"] = a.alpha;
    man.config()["sigma"] = cfg.sigma;
  }
  man.config()["budget"] = cfg.budget;
  man.config()["trace_stride"] = cfg.trace_stride;
  man.config()["dedup"] = cfg.dedup;
  man.output(out);
  auto& res = man.results();
  res["target_size"] = run.state.remaining.size() + run.state.matched.size();
  res["final_matches"] = run.trace.final_matches();
  res["guesses"] = run.state.guesses;
  res["raw_draws"] = run.state.raw_draws;
  if (adaptive) {
    res["alpha_resolved"] = run.state.alpha;
    res["trigger_guess"] = run.state.trigger_guess ? json(*run.state.trigger_guess) : json(nullptr);
    res["mixture_components"] = run.state.component_count();
  }
  man.write(out);
  std::cerr << run.trace.final_matches() << " matches in " << run.state.guesses << " guesses\n";
  return kOk;
}

struct TestsetArgs {
  Common c;
  std::string corpus;
  double p = 0.5;
  std::size_t per_class = 20;
  std::size_t max_draws = 200000;
  std::string classes;  // desk | reference | scaled:<factor>
  std::string out = "testsets";
};

int run_build_testsets(const TestsetArgs& a) {
  TestSetOptions o;
  o.p = a.p;
  o.per_class = a.per_class;
  o.max_draws = a.max_draws;
  const std::string scheme = a.classes.empty() ? a.c.preset : a.classes;
  if (scheme == "desk") {
    o.classes = desk_classes();
  } else if (scheme == "reference") {
    o.classes = reference_classes();
  } else if (scheme.rfind("scaled:", 0) == 0) {
    const auto f = parse_real_list(scheme.substr(7), "--classes");
    validated([&] { o.classes = scaled_classes(f.front()); });
  } else {
    fail(kBadConfig, "--classes must be desk, reference or scaled:<factor>");
  }
  validated([&] { o.validate(); });
  LeakReadOptions ro;
  ro.max_len = a.c.preset == "reference" ? 16 : 10;
  const LeakDataset d = load_leak(a.corpus, ro);
  Rng rng(a.c.seed);
  const TestSetCollection col = build_biased_testsets(d, o, rng);
  for (const auto& msg : col.diagnostics) std::cerr << "warning: " << msg << '\n';
  const fs::path dir = resolve_output(a.c, a.out);
  write_testsets(dir, col);
  Manifest man("build-testsets", a.c);
  man.input("corpus", a.corpus);
  man.config()["p"] = o.p;
  man.config()["per_class"] = o.per_class;
  man.config()["classes"] = scheme;
  for (const auto& c : o.classes) man.config()["bounds"][c.name] = {c.lo, c.hi};
  man.output(dir / "index.csv");
  man.results()["sets"] = col.sets.size();
  man.results()["draws"] = col.draws;
  man.results()["diagnostics"] = col.diagnostics;
  man.write(dir / "index.csv");
  std::cerr << col.sets.size() << " test sets in " << dir.string() << '\n';
  return kOk;
}

std::vector<BiasedTestSet> load_testsets(const std::string& dir) {
  require_dir(dir, "test-set directory");
  const fs::path index = fs::path(dir) / "index.csv";
  require_file(index.string(), "test-set index");
  std::ifstream in(index);
  std::string line;
  std::getline(in, line);
  std::vector<BiasedTestSet> sets;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) fail(kBadData, "malformed index line: " + line);
    const std::string file = line.substr(0, c1);
    const std::string label = line.substr(c1 + 1, c2 - c1 - 1);
    require_file((fs::path(dir) / file).string(), "test-set file");
    try {
      sets.push_back(read_testset(fs::path(dir) / file, label));
    } catch (const Error& e) {
      fail(kBadData, e.what());
    }
  }
  if (sets.empty()) fail(kBadData, "no test sets listed in " + index.string());
  return sets;
}

struct EvalCpgArgs {
  Common c;
  std::string model;
  std::string testsets;
  std::uint64_t budget = 100000;
  double sigma = 0.8;
  std::string out = "eval_cpg.csv";
};

int run_eval_cpg(const EvalCpgArgs& a) {
  const ModelParams m = load_model(a.model);
  if (a.budget < 1) fail(kBadConfig, "--budget must be >= 1");
  if (!(a.sigma > 0.0)) fail(kBadConfig, "--sigma must be > 0");
  auto sets = load_testsets(a.testsets);
  std::vector<BiasedTestSet> usable;
  for (auto& s : sets) {
    if (s.pattern.size() <= m.config.max_len) usable.push_back(std::move(s));
  }
  if (usable.size() < sets.size()) std::cerr << "warning: skipped " << sets.size() - usable.size() << " over-length templates\n";
  CpgEvalOptions o;
  o.budget = a.budget;
  o.sigma = a.sigma;
  o.seed = a.c.seed;
  o.threads = a.c.threads;
  const fs::path out = resolve_output(a.c, a.out);
  const auto rows = evaluate_cpg(m, usable, o);
  {
    auto f = open_output(out);
    write_cpg_eval_csv(f, rows);
  }
  Manifest man("eval-cpg", a.c);
  man.model(a.model);
  man.config()["testsets"] = a.testsets;
  man.config()["budget"] = a.budget;
  man.config()["sigma"] = a.sigma;
  man.output(out);
  std::size_t cpg = 0, prior = 0;
  for (const auto& r : rows) {
    cpg += r.cpg_matches;
    prior += r.prior_matches;
  }
  man.results()["templates"] = rows.size();
  man.results()["cpg_matches"] = cpg;
  man.results()["prior_matches"] = prior;
  man.write(out);
  return kOk;
}

struct SweepArgs {
  Common c;
  std::string model;
  std::string target;
  std::string alphas = "0.05,0.10,0.15";
  std::string sigmas = "0.15,0.35,0.8";
  std::uint64_t budget = 100000;
  std::size_t seeds = 3;
  std::string out = "sweep.csv";
};

int run_sweep(const SweepArgs& a) {
  const ModelParams m = load_model(a.model);
  std::vector<HotStart> alphas;
  validated([&] {
    std::stringstream ss(a.alphas);
    std::string item;
    while (std::getline(ss, item, ',')) alphas.push_back(HotStart::parse(item));
    if (alphas.empty()) throw Error("--alphas: empty list");
  });
  const auto sigmas = parse_real_list(a.sigmas, "--sigmas");
  if (a.seeds < 1) fail(kBadConfig, "--seeds must be >= 1");
  DpgConfig base = default_dpg_config();
  base.budget = a.budget;
  base.threads = a.c.threads;
  validated([&] {
    for (double s : sigmas) {
      DpgConfig probe = base;
      probe.sigma = s;
      for (const auto& al : alphas) {
        probe.alpha = al;
        probe.validate();
      }
    }
  });
  const auto target = load_target(a.target, m);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(stream_seed(a.c.seed, i));
  const fs::path out = resolve_output(a.c, a.out);
  const auto cells = sweep_dpg(m, target, alphas, sigmas, base, seeds);
  {
    auto f = open_output(out);
    write_sweep_csv(f, cells);
  }
  Manifest man("sweep", a.c);
  man.model(a.model);
  man.input("target", a.target);
  man.config()["alphas"] = a.alphas;
  man.config()["sigmas"] = a.sigmas;
  man.config()["budget"] = a.budget;
  man.config()["seeds"] = a.seeds;
  man.output(out);
  man.results()["cells"] = cells.size();
  man.write(out);
  return kOk;
}

struct BenchArgs {
  Common c;
  std::string model;
  std::uint64_t n = 100000;
  bool filtered = false;
  double fp = 0.01;
  std::string sink;
  std::string out = "bench.json";
};

int run_bench(const BenchArgs& a) {
  const ModelParams m = load_model(a.model);
  if (a.n < 10000) fail(kBadConfig, "--n must be >= 10000 for stable timing");
  if (!(a.fp > 0.0 && a.fp < 1.0)) fail(kBadConfig, "--fp must lie in (0, 1)");
  const fs::path out = resolve_output(a.c, a.out);
  BenchOptions o;
  o.n = a.n;
  o.filtered = a.filtered;
  o.fp_rate = a.fp;
  o.threads = a.c.threads;
  o.seed = a.c.seed;
  o.sink = a.sink.empty() ? fs::path(out.string() + ".guesses.txt") : resolve_output(a.c, a.sink);
  prepare_output(out);
  const BenchReport r = throughput_bench(m, o);
  {
    auto f = open_output(out);
    f << r.to_json() << '\n';
  }
  std::cout << r.to_json() << '\n';
  return kOk;
}

struct ExportArgs {
  Common c;
  std::string model;
  std::string corpus;
  std::size_t limit = 0;
  std::string out = "latent.csv";
};

int run_export_latent(const ExportArgs& a) {
  const ModelParams m = load_model(a.model);
  LeakReadOptions ro;
  ro.max_len = m.config.max_len;
  ro.alphabet = m.config.alphabet;
  const LeakDataset d = load_leak(a.corpus, ro);
  auto xs = d.unique_passwords();
  if (a.limit > 0 && xs.size() > a.limit) xs.resize(a.limit);
  std::vector<Template> ts;
  std::vector<std::string> labels;
  for (const auto& x : xs) {
    ts.push_back(Template::of(x));
    labels.push_back(u32_to_utf8(x));
  }
  const fs::path out = resolve_output(a.c, a.out);
  const auto zs = encode_latent_batch(m, ts);
  {
    auto f = open_output(out);
    write_latent_csv(f, labels, zs);
  }
  Manifest man("export-latent", a.c);
  man.model(a.model);
  man.input("corpus", a.corpus);
  man.output(out);
  man.results()["points"] = zs.size();
  man.write(out);
  return kOk;
}

// ---------------------------------------------------------------------------

int run(std::vector<std::string> args) {
  CLI::App app{"latentpass: latent-space password guessing"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  MakeCorpusArgs mk;
  auto* c_mk = app.add_subcommand("make-corpus", "Write a synthetic leak file");
  add_common(c_mk, mk.c);
  c_mk->add_option("--draws", mk.draws, "Password occurrences to draw");
  c_mk->add_option("--max-len", mk.max_len, "Maximum password length");
  c_mk->add_option("--out", mk.out, "Leak file");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model on a leak file");
  add_common(c_tr, tr.c);
  c_tr->add_option("--corpus", tr.corpus, "Leak file")->required();
  c_tr->add_option("--out", tr.out, "Checkpoint path");
  c_tr->add_option("--resume", tr.resume, "Continue from this checkpoint");
  c_tr->add_option("--epochs", tr.epochs);
  c_tr->add_option("--epsilon", tr.epsilon, "Context-noise level");
  c_tr->add_option("--lambda", tr.lambda, "MMD weight");
  c_tr->add_option("--lr", tr.lr);
  c_tr->add_option("--lr-decay", tr.lr_decay, "Per-epoch learning-rate factor");
  c_tr->add_option("--batch", tr.batch);
  c_tr->add_option("--latent-dim", tr.latent_dim);
  c_tr->add_option("--max-len", tr.max_len);
  c_tr->add_option("--hidden", tr.hidden);
  c_tr->add_option("--blocks", tr.blocks);
  c_tr->add_option("--noise", tr.noise, "char | span")->check(CLI::IsMember({"char", "span"}));
  c_tr->add_option("--span-k", tr.span_k, "Span length for --noise span");

  SampleArgs sa;
  auto* c_sa = app.add_subcommand("sample", "Sample guesses from the prior or around a pivot");
  add_common(c_sa, sa.c);
  c_sa->add_option("--model", sa.model)->required();
  c_sa->add_option("--n", sa.n);
  c_sa->add_option("--pivot", sa.pivot, "Pivot password or template");
  c_sa->add_option("--sigma", sa.sigma, "Pivot bandwidth");
  c_sa->add_option("--out", sa.out);

  CpgArgs cp;
  auto* c_cp = app.add_subcommand("cpg", "Conditional guessing from a template ('*' is a wildcard)");
  add_common(c_cp, cp.c);
  c_cp->add_option("--model", cp.model)->required();
  c_cp->add_option("--template", cp.tmpl)->required();
  c_cp->add_option("--n", cp.n, "Coherent guesses wanted");
  c_cp->add_option("--sigma", cp.sigma);
  c_cp->add_option("--max-attempts", cp.max_attempts);
  c_cp->add_flag("--keep-duplicates", cp.keep_duplicates);
  c_cp->add_option("--out", cp.out);

  AttackArgs dp;
  auto* c_dp = app.add_subcommand("dpg", "Dynamic guessing attack against a target file");
  add_common(c_dp, dp.c);
  c_dp->add_option("--model", dp.model)->required();
  c_dp->add_option("--target", dp.target)->required();
  c_dp->add_option("--alpha", dp.alpha, "Hot start: fraction (0.10, 10%) or count");
  c_dp->add_option("--sigma", dp.sigma);
  c_dp->add_option("--budget", dp.budget);
  c_dp->add_option("--stride", dp.stride, "Trace interval");
  c_dp->add_flag("--dedup", dp.dedup, "Count only first-time guesses");
  c_dp->add_option("--out", dp.out);

  AttackArgs st;
  auto* c_st = app.add_subcommand("static", "Prior-sampling attack against a target file");
  add_common(c_st, st.c);
  c_st->add_option("--model", st.model)->required();
  c_st->add_option("--target", st.target)->required();
  c_st->add_option("--budget", st.budget);
  c_st->add_option("--stride", st.stride);
  c_st->add_flag("--dedup", st.dedup);
  c_st->add_option("--out", st.out);

  TestsetArgs ts;
  auto* c_ts = app.add_subcommand("build-testsets", "Build biased template test sets");
  add_common(c_ts, ts.c);
  c_ts->add_option("--corpus", ts.corpus)->required();
  c_ts->add_option("--p", ts.p, "Wildcard probability");
  c_ts->add_option("--per-class", ts.per_class);
  c_ts->add_option("--max-draws", ts.max_draws);
  c_ts->add_option("--classes", ts.classes, "desk | reference | scaled:<factor>");
  c_ts->add_option("--out", ts.out, "Output directory");

  EvalCpgArgs ev;
  auto* c_ev = app.add_subcommand("eval-cpg", "CPG against prior sampling on test sets");
  add_common(c_ev, ev.c);
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--testsets", ev.testsets)->required();
  c_ev->add_option("--budget", ev.budget);
  c_ev->add_option("--sigma", ev.sigma);
  c_ev->add_option("--out", ev.out);

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "DPG alpha x sigma grid");
  add_common(c_sw, sw.c);
  c_sw->add_option("--model", sw.model)->required();
  c_sw->add_option("--target", sw.target)->required();
  c_sw->add_option("--alphas", sw.alphas);
  c_sw->add_option("--sigmas", sw.sigmas);
  c_sw->add_option("--budget", sw.budget);
  c_sw->add_option("--seeds", sw.seeds, "Runs per cell");
  c_sw->add_option("--out", sw.out);

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Generation throughput");
  add_common(c_be, be.c);
  c_be->add_option("--model", be.model)->required();
  c_be->add_option("--n", be.n);
  c_be->add_flag("--filtered", be.filtered, "Deduplicate through a Bloom filter");
  c_be->add_option("--fp", be.fp, "Bloom false-positive rate");
  c_be->add_option("--sink", be.sink, "Guess sink file");
  c_be->add_option("--out", be.out);

  ExportArgs ex;
  auto* c_ex = app.add_subcommand("export-latent", "Write latent points of corpus passwords");
  add_common(c_ex, ex.c);
  c_ex->add_option("--model", ex.model)->required();
  c_ex->add_option("--corpus", ex.corpus)->required();
  c_ex->add_option("--limit", ex.limit, "Keep the first N unique passwords");
  c_ex->add_option("--out", ex.out);

  args = expand_config(std::move(args));
  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (c_mk->parsed()) return run_make_corpus(mk);
  if (c_tr->parsed()) return run_train(tr);
  if (c_sa->parsed()) return run_sample(sa);
  if (c_cp->parsed()) return run_cpg(cp);
  if (c_dp->parsed()) return run_attack(dp, true);
  if (c_st->parsed()) return run_attack(st, false);
  if (c_ts->parsed()) return run_build_testsets(ts);
  if (c_ev->parsed()) return run_eval_cpg(ev);
  if (c_sw->parsed()) return run_sweep(sw);
  if (c_be->parsed()) return run_bench(be);
  if (c_ex->parsed()) return run_export_latent(ex);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv, argv + argc));
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
