#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "latentpass/charspace.hpp"

namespace latentpass {

struct LeakEntry {
  Password password;
  std::uint64_t count = 1;
};

/// Unique passwords with occurrence counts, in first-appearance order.
struct LeakDataset {
  std::string source;
  Alphabet alphabet;
  std::size_t max_len = 0;
  std::vector<LeakEntry> entries;

  std::size_t unique_count() const { return entries.size(); }
  std::uint64_t total_count() const;
  std::vector<Password> unique_passwords() const;
  /// Every occurrence, count-expanded.
  std::vector<Password> expanded() const;
};

struct LeakReadStats {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t skipped_empty = 0;
  std::size_t skipped_over_length = 0;
  std::size_t skipped_alphabet = 0;
  std::size_t skipped_malformed = 0;

  std::size_t skipped() const {
    return skipped_over_length + skipped_alphabet + skipped_malformed;
  }
};

struct LeakReadOptions {
  std::size_t max_len = 10;
  /// When set, lines with characters outside it are skipped; otherwise the
  /// alphabet is derived from the accepted lines.
  std::optional<Alphabet> alphabet;
};

/// Reads "password" or "count<TAB>password" lines (UTF-8).
LeakDataset read_leak(std::istream& in, const LeakReadOptions& options,
                      LeakReadStats* stats = nullptr, std::string source = "stream");
LeakDataset read_leak_file(const std::filesystem::path& path,
                           const LeakReadOptions& options,
                           LeakReadStats* stats = nullptr);

/// Builds a dataset from already-validated passwords (duplicates merged).
LeakDataset make_dataset(std::vector<Password> passwords, Alphabet alphabet,
                         std::size_t max_len, std::string source = "memory");

void write_leak(std::ostream& out, const LeakDataset& d);

}  // namespace latentpass
