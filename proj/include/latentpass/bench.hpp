#pragma once

// Generation throughput: sample the prior, decode and write guesses to a sink
// file, optionally through the Bloom deduplication filter.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "latentpass/cwae.hpp"

namespace latentpass {

struct BenchOptions {
  std::uint64_t n = 100000;
  bool filtered = false;
  double fp_rate = 0.01;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::filesystem::path sink;  // "/dev/null"-style paths are fine
};

struct BenchReport {
  std::uint64_t guesses = 0;  // raw guesses generated
  std::uint64_t emitted = 0;  // written to the sink
  double seconds = 0.0;
  double guesses_per_second = 0.0;
  bool filtered = false;
  std::size_t threads = 1;
  unsigned hardware_threads = 0;
  std::string compiler;

  std::string to_json() const;
};

BenchReport throughput_bench(const ModelParams& m, const BenchOptions& options);

}  // namespace latentpass
