#include "latentpass/leak_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

namespace latentpass {

std::uint64_t LeakDataset::total_count() const {
  std::uint64_t total = 0;
  for (const auto& e : entries) total += e.count;
  return total;
}

std::vector<Password> LeakDataset::unique_passwords() const {
  std::vector<Password> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.password);
  return out;
}

std::vector<Password> LeakDataset::expanded() const {
  std::vector<Password> out;
  out.reserve(total_count());
  for (const auto& e : entries) out.insert(out.end(), e.count, e.password);
  return out;
}

namespace {

struct ParsedLine {
  std::string_view text;
  std::uint64_t count = 1;
};

ParsedLine split_count(std::string_view line) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos || tab == 0) return {line, 1};
  const auto prefix = line.substr(0, tab);
  std::uint64_t count = 0;
  auto [ptr, ec] = std::from_chars(prefix.data(), prefix.data() + prefix.size(), count);
  if (ec != std::errc() || ptr != prefix.data() + prefix.size() || count == 0) {
    return {line, 1};
  }
  return {line.substr(tab + 1), count};
}

void merge_into(LeakDataset& d, std::unordered_map<Password, std::size_t>& index,
                Password x, std::uint64_t count) {
  auto [it, inserted] = index.emplace(x, d.entries.size());
  if (inserted) {
    d.entries.push_back({std::move(x), count});
  } else {
    d.entries[it->second].count += count;
  }
}

}  // namespace

LeakDataset read_leak(std::istream& in, const LeakReadOptions& options,
                      LeakReadStats* stats, std::string source) {
  LeakReadStats local;
  LeakReadStats& st = stats ? *stats : local;
  st = {};

  std::vector<std::pair<Password, std::uint64_t>> accepted;
  std::string line;
  while (std::getline(in, line)) {
    ++st.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      ++st.skipped_empty;
      continue;
    }
    const ParsedLine parsed = split_count(line);
    auto decoded = try_utf8_to_u32(parsed.text);
    if (!decoded || decoded->empty()) {
      ++st.skipped_malformed;
      continue;
    }
    if (decoded->size() > options.max_len) {
      ++st.skipped_over_length;
      continue;
    }
    const bool has_sentinel = decoded->find(kPadSymbol) != Password::npos ||
                              decoded->find(kWildcardSymbol) != Password::npos;
    if (has_sentinel || (options.alphabet &&
                         !options.alphabet->valid_password(*decoded, options.max_len))) {
      ++st.skipped_alphabet;
      continue;
    }
    ++st.accepted;
    accepted.emplace_back(std::move(*decoded), parsed.count);
  }

  LeakDataset d;
  d.source = std::move(source);
  d.max_len = options.max_len;
  if (options.alphabet) {
    d.alphabet = *options.alphabet;
  } else {
    std::vector<Password> words;
    words.reserve(accepted.size());
    for (const auto& [x, c] : accepted) words.push_back(x);
    d.alphabet = build_alphabet(std::span<const Password>(words));
  }
  std::unordered_map<Password, std::size_t> index;
  for (auto& [x, c] : accepted) merge_into(d, index, std::move(x), c);
  return d;
}

LeakDataset read_leak_file(const std::filesystem::path& path,
                           const LeakReadOptions& options, LeakReadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open leak file: " + path.string());
  return read_leak(in, options, stats, path.filename().string());
}

LeakDataset make_dataset(std::vector<Password> passwords, Alphabet alphabet,
                         std::size_t max_len, std::string source) {
  LeakDataset d;
  d.source = std::move(source);
  d.alphabet = std::move(alphabet);
  d.max_len = max_len;
  std::unordered_map<Password, std::size_t> index;
  for (auto& x : passwords) {
    if (!d.alphabet.valid_password(x, max_len)) {
      throw Error("make_dataset: password invalid for alphabet or length");
    }
    merge_into(d, index, std::move(x), 1);
  }
  return d;
}

void write_leak(std::ostream& out, const LeakDataset& d) {
  for (const auto& e : d.entries) {
    out << e.count << '\t' << u32_to_utf8(e.password) << '\n';
  }
}

}  // namespace latentpass
