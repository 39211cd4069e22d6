#include "latentpass/cpg.hpp"

#include <algorithm>
#include <unordered_set>

namespace latentpass {

namespace {
constexpr std::size_t kSampleBatch = 2048;
}

void CpgRequest::validate() const {
  if (pattern.size() == 0) throw Error("cpg: empty template");
  if (n < 1) throw Error("cpg: n must be >= 1");
  if (!(sigma > 0.0)) throw Error("cpg: sigma must be > 0");
  if (max_attempts < n) throw Error("cpg: max_attempts must be >= n");
}

CpgRequest reference_cpg_request(Template t, std::size_t n) {
  CpgRequest req;
  req.pattern = std::move(t);
  req.n = n;
  req.sigma = 0.8;
  req.max_attempts = std::max<std::size_t>(n, 10 * n);
  return req;
}

CpgResult cpg_attack(const ModelParams& m, const CpgRequest& req, Rng& rng) {
  req.validate();
  if (req.pattern.size() > m.config.max_len) throw Error("over-length");

  const PivotDist pivot{encode_latent(m, req.pattern), req.sigma};
  const LatentDistribution dist = pivot;

  CpgResult result;
  std::unordered_set<Password> seen;
  std::vector<double> rows;
  while (result.attempts_used < req.max_attempts && result.guesses.size() < req.n) {
    const std::size_t want = std::min(kSampleBatch, req.max_attempts - result.attempts_used);
    rows.clear();
    sample_into(dist, want, rng, rows);
    const auto batch = generate_batch(m, rows, req.threads);
    for (const auto& x : batch) {
      ++result.attempts_used;
      if (matches(x, req.pattern)) {
        ++result.coherent_samples;
        if (!req.dedup || seen.insert(x).second) result.guesses.push_back(x);
      }
      if (result.guesses.size() >= req.n) break;
    }
  }
  result.coherence_rate = result.attempts_used == 0
                              ? 0.0
                              : static_cast<double>(result.coherent_samples) /
                                    static_cast<double>(result.attempts_used);
  if (result.guesses.empty()) {
    result.diagnostic = "no template-coherent sample within " +
                        std::to_string(result.attempts_used) + " attempts";
  } else if (result.guesses.size() < req.n) {
    result.diagnostic = "budget exhausted with " + std::to_string(result.guesses.size()) +
                        " of " + std::to_string(req.n) + " guesses";
  }
  return result;
}

}  // namespace latentpass
