#pragma once

// Synthetic leak generator: draws passwords from a fixed mixture of
// human-style construction rules (names and words with digit suffixes,
// dates, keyboard walks, leet substitutions, random tails) with Zipf-skewed
// token popularity, so repeated draws produce a realistic head and tail.

#include <cstddef>
#include <cstdint>

#include "latentpass/leak_io.hpp"

namespace latentpass {

struct SyntheticLeakOptions {
  std::size_t draws = 60000;  // occurrences, before merging duplicates
  std::size_t max_len = 10;
  std::uint64_t seed = 1;
};

LeakDataset synthetic_leak(const SyntheticLeakOptions& options);

}  // namespace latentpass
