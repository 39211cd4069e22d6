#pragma once

// Password alphabet, fixed-length probabilistic encoding, templates with
// wildcards and the two training-noise processes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace latentpass {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of an independent substream `stream` of a run seeded with `seed`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

/// A password is a sequence of code points drawn from an Alphabet.
using Password = std::u32string;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reserved sentinels, taken from the Unicode private use area.
inline constexpr char32_t kPadSymbol = U'\uE000';
inline constexpr char32_t kWildcardSymbol = U'\uE001';

std::u32string utf8_to_u32(std::string_view text);
std::string u32_to_utf8(std::u32string_view text);
/// Returns nullopt on malformed UTF-8 instead of throwing.
std::optional<std::u32string> try_utf8_to_u32(std::string_view text);

class Alphabet {
 public:
  Alphabet() = default;
  /// Throws when symbols is empty, repeats a code point or uses a sentinel.
  explicit Alphabet(std::u32string symbols);

  std::size_t size() const { return symbols_.size(); }
  /// Encoding channels: every symbol plus the pad channel.
  std::size_t channels() const { return symbols_.size() + 1; }
  std::size_t pad_index() const { return symbols_.size(); }

  std::optional<std::size_t> index_of(char32_t c) const;
  char32_t symbol(std::size_t index) const { return symbols_.at(index); }
  bool contains(char32_t c) const { return index_of(c).has_value(); }
  bool valid_password(std::u32string_view x, std::size_t max_len) const;

  const std::u32string& symbols() const { return symbols_; }
  std::string to_utf8() const { return u32_to_utf8(symbols_); }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::u32string symbols_;
  std::vector<std::int32_t> ascii_;  // fast path for code points < 128
  std::unordered_map<char32_t, std::size_t> wide_;
};

/// Alphabet of every code point in the corpus, sorted by code point.
Alphabet build_alphabet(std::span<const std::string> corpus);
Alphabet build_alphabet(std::span<const Password> corpus);

/// Per-position pattern over the alphabet plus the wildcard.
class Template {
 public:
  Template() = default;
  explicit Template(std::u32string cells);
  static Template of(const Password& x) { return Template(x); }

  /// Parses the command-line form: '*' is a wildcard, '\*' a literal
  /// asterisk and '\\' a literal backslash.
  static Template parse(std::string_view text);
  /// Inverse of parse().
  std::string to_string() const;

  std::size_t size() const { return cells_.size(); }
  bool is_wildcard(std::size_t i) const { return cells_[i] == kWildcardSymbol; }
  char32_t cell(std::size_t i) const { return cells_[i]; }
  std::size_t wildcard_count() const;
  std::size_t observed_count() const { return size() - wildcard_count(); }
  const std::u32string& cells() const { return cells_; }

  friend bool operator==(const Template&, const Template&) = default;

 private:
  std::u32string cells_;
};

/// L columns of channel probabilities, stored column-major by position.
class EncodedMatrix {
 public:
  EncodedMatrix(std::size_t length, std::size_t channels);

  std::size_t length() const { return length_; }
  std::size_t channels() const { return channels_; }
  std::span<float> column(std::size_t i) {
    return {values_.data() + i * channels_, channels_};
  }
  std::span<const float> column(std::size_t i) const {
    return {values_.data() + i * channels_, channels_};
  }
  bool is_wildcard(std::size_t i) const { return wildcard_[i] != 0; }
  void set_wildcard(std::size_t i, bool w) { wildcard_[i] = w ? 1 : 0; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

 private:
  std::size_t length_;
  std::size_t channels_;
  std::vector<float> values_;
  std::vector<std::uint8_t> wildcard_;
};

/// One-hot encoding padded to max_len. When smoothing > 0 every entry gets
/// uniform noise in [0, smoothing) and each column is renormalized.
EncodedMatrix encode(const Password& x, const Alphabet& a, std::size_t max_len,
                     double smoothing, Rng& rng);
EncodedMatrix encode(const Password& x, const Alphabet& a, std::size_t max_len);

/// Wildcard cells become all-zero columns.
EncodedMatrix encode_template(const Template& t, const Alphabet& a,
                              std::size_t max_len);

/// Writes the flattened (position-major) encoding of t into out, which must
/// hold max_len * channels floats. Shared by the batch paths of the model.
/// With smoothing > 0 and no rng, columns get the expected smoothing
/// (every entry + smoothing / 2, renormalized).
void encode_into(std::span<float> out, const Template& t, const Alphabet& a,
                 std::size_t max_len, double smoothing, Rng* rng);

/// Argmax readout stopping at the first pad; throws "empty decode" when the
/// first column already reads as pad.
Password decode(const EncodedMatrix& m, const Alphabet& a);

/// Readout of argmax channel indices, one per position.
Password decode_indices(std::span<const std::uint32_t> argmax, const Alphabet& a);

bool matches(std::u32string_view x, const Template& t);

/// Each position independently becomes a wildcard with probability p.
Template wildcard_each(const Password& x, double p, Rng& rng);

/// Context noise: wildcard probability min(1, epsilon / |x|) per position.
Template context_noise(const Password& x, double epsilon, Rng& rng);

/// Masks k contiguous positions starting at a uniform start in
/// [0, max(0, |x| - k)].
Template span_mask_noise(const Password& x, std::size_t k, Rng& rng);
Template span_mask_at(const Password& x, std::size_t k, std::size_t start);

}  // namespace latentpass

template <>
struct std::hash<latentpass::Template> {
  std::size_t operator()(const latentpass::Template& t) const noexcept {
    return std::hash<std::u32string>{}(t.cells());
  }
};
