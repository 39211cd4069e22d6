#pragma once

// Conditional password guessing: invert a template with the encoder, sample
// around its latent point and keep template-coherent guesses.

#include <cstddef>
#include <string>
#include <vector>

#include "latentpass/cwae.hpp"

namespace latentpass {

struct CpgRequest {
  Template pattern;
  std::size_t n = 1000;             // coherent guesses wanted
  double sigma = 0.8;
  std::size_t max_attempts = 100000;  // raw sample cap
  bool dedup = true;
  std::size_t threads = 1;

  void validate() const;
};

/// Reference setting for template attacks (sigma = 0.8).
CpgRequest reference_cpg_request(Template t, std::size_t n);

struct CpgResult {
  std::vector<Password> guesses;  // coherent, in first-generation order
  std::size_t attempts_used = 0;
  std::size_t coherent_samples = 0;
  double coherence_rate = 0.0;
  std::string diagnostic;
};

CpgResult cpg_attack(const ModelParams& m, const CpgRequest& req, Rng& rng);

}  // namespace latentpass
