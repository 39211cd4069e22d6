#include "latentpass/bench.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "json.hpp"

#include "latentpass/harness.hpp"

namespace latentpass {

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["guesses"] = guesses;
  j["emitted"] = emitted;
  j["seconds"] = seconds;
  j["guesses_per_second"] = guesses_per_second;
  j["filtered"] = filtered;
  j["threads"] = threads;
  j["hardware_threads"] = hardware_threads;
  j["compiler"] = compiler;
  return j.dump(2);
}

BenchReport throughput_bench(const ModelParams& m, const BenchOptions& options) {
  if (options.n < 1) throw Error("bench: n must be >= 1");
  std::ofstream sink(options.sink, std::ios::binary);
  if (!sink) throw Error("bench: cannot open sink " + options.sink.string());

  std::optional<DedupFilter> filter;
  if (options.filtered) filter.emplace(options.n, options.fp_rate);
  std::optional<DedupStream> stream;
  if (filter) stream.emplace(*filter);

  BenchReport report;
  report.filtered = options.filtered;
  report.threads = options.threads;
  report.hardware_threads = std::thread::hardware_concurrency();
#if defined(__clang__)
  report.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  report.compiler = "gcc " __VERSION__;
#else
  report.compiler = "unknown";
#endif

  Rng rng(options.seed);
  const LatentDistribution prior = PriorDist{m.config.latent_dim};
  std::vector<double> rows;
  std::string line;
  const auto start = std::chrono::steady_clock::now();
  while (report.guesses < options.n) {
    const auto want = static_cast<std::size_t>(std::min<std::uint64_t>(4096, options.n - report.guesses));
    rows.clear();
    sample_into(prior, want, rng, rows);
    for (const auto& x : generate_batch(m, rows, options.threads)) {
      ++report.guesses;
      line = u32_to_utf8(x);
      if (stream && !stream->offer_bytes(line)) continue;
      line += '\n';
      sink.write(line.data(), static_cast<std::streamsize>(line.size()));
      ++report.emitted;
    }
  }
  sink.flush();
  if (!sink) throw Error("bench: write failed on " + options.sink.string());
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.guesses_per_second = static_cast<double>(report.guesses) / std::max(report.seconds, 1e-9);
  return report;
}

}  // namespace latentpass
