#include "latentpass/charspace.hpp"

#include <algorithm>
#include <set>

namespace latentpass {

std::optional<std::u32string> try_utf8_to_u32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      return std::nullopt;
    }
    if (i + extra >= text.size()) return std::nullopt;
    for (std::size_t j = 1; j <= extra; ++j) {
      const auto b = static_cast<unsigned char>(text[i + j]);
      if ((b & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (b & 0x3F);
    }
    // Overlong forms and surrogates are rejected.
    static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return std::nullopt;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::u32string utf8_to_u32(std::string_view text) {
  auto decoded = try_utf8_to_u32(text);
  if (!decoded) throw Error("malformed UTF-8");
  return std::move(*decoded);
}

std::string u32_to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::u32string symbols)
    : symbols_(std::move(symbols)), ascii_(128, -1) {
  if (symbols_.empty()) throw Error("alphabet: no symbols");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const char32_t c = symbols_[i];
    if (c == kPadSymbol || c == kWildcardSymbol) {
      throw Error("alphabet: reserved sentinel used as symbol");
    }
    if (contains(c)) throw Error("alphabet: duplicate symbol");
    if (c < 128) {
      ascii_[c] = static_cast<std::int32_t>(i);
    } else {
      wide_.emplace(c, i);
    }
  }
}

std::optional<std::size_t> Alphabet::index_of(char32_t c) const {
  if (c < 128) {
    if (ascii_.empty() || ascii_[c] < 0) return std::nullopt;
    return static_cast<std::size_t>(ascii_[c]);
  }
  auto it = wide_.find(c);
  if (it == wide_.end()) return std::nullopt;
  return it->second;
}

bool Alphabet::valid_password(std::u32string_view x, std::size_t max_len) const {
  if (x.empty() || x.size() > max_len) return false;
  return std::all_of(x.begin(), x.end(), [&](char32_t c) { return contains(c); });
}

Alphabet build_alphabet(std::span<const Password> corpus) {
  if (corpus.empty()) throw Error("empty corpus");
  std::set<char32_t> seen;
  for (const auto& x : corpus) seen.insert(x.begin(), x.end());
  seen.erase(kPadSymbol);
  seen.erase(kWildcardSymbol);
  if (seen.empty()) throw Error("empty corpus");
  return Alphabet(std::u32string(seen.begin(), seen.end()));
}

Alphabet build_alphabet(std::span<const std::string> corpus) {
  if (corpus.empty()) throw Error("empty corpus");
  std::vector<Password> decoded;
  decoded.reserve(corpus.size());
  for (const auto& line : corpus) decoded.push_back(utf8_to_u32(line));
  return build_alphabet(std::span<const Password>(decoded));
}

// ---------------------------------------------------------------------------
// Template

Template::Template(std::u32string cells) : cells_(std::move(cells)) {
  if (cells_.find(kPadSymbol) != std::u32string::npos) {
    throw Error("template: pad symbol in cells");
  }
}

Template Template::parse(std::string_view text) {
  const std::u32string raw = utf8_to_u32(text);
  std::u32string cells;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == U'\\' && i + 1 < raw.size() &&
        (raw[i + 1] == U'*' || raw[i + 1] == U'\\')) {
      cells.push_back(raw[++i]);
    } else if (raw[i] == U'*') {
      cells.push_back(kWildcardSymbol);
    } else {
      cells.push_back(raw[i]);
    }
  }
  if (cells.empty()) throw Error("template: empty");
  return Template(std::move(cells));
}

std::string Template::to_string() const {
  std::u32string out;
  for (char32_t c : cells_) {
    if (c == kWildcardSymbol) {
      out.push_back(U'*');
    } else if (c == U'*' || c == U'\\') {
      out.push_back(U'\\');
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return u32_to_utf8(out);
}

std::size_t Template::wildcard_count() const {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), kWildcardSymbol));
}

// ---------------------------------------------------------------------------
// Encoding

EncodedMatrix::EncodedMatrix(std::size_t length, std::size_t channels)
    : length_(length),
      channels_(channels),
      values_(length * channels, 0.0f),
      wildcard_(length, 0) {}

namespace {

std::size_t symbol_index(const Alphabet& a, char32_t c) {
  auto idx = a.index_of(c);
  if (!idx) throw Error("unknown symbol U+" + std::to_string(static_cast<std::uint32_t>(c)));
  return *idx;
}

void smooth_column(std::span<float> col, double smoothing, Rng& rng) {
  std::uniform_real_distribution<double> noise(0.0, smoothing);
  double sum = 0.0;
  std::vector<double> tmp(col.size());
  for (std::size_t j = 0; j < col.size(); ++j) {
    tmp[j] = col[j] + noise(rng);
    sum += tmp[j];
  }
  for (std::size_t j = 0; j < col.size(); ++j) {
    col[j] = static_cast<float>(tmp[j] / sum);
  }
}

// Expected value of smooth_column: every entry gains smoothing / 2.
void smooth_column_mean(std::span<float> col, double smoothing) {
  const double add = smoothing / 2.0;
  double sum = 0.0;
  for (float v : col) sum += v + add;
  for (auto& v : col) v = static_cast<float>((v + add) / sum);
}

}  // namespace

void encode_into(std::span<float> out, const Template& t, const Alphabet& a,
                 std::size_t max_len, double smoothing, Rng* rng) {
  const std::size_t channels = a.channels();
  if (t.size() > max_len) throw Error("over-length");
  if (out.size() != max_len * channels) throw Error("encode: output size mismatch");
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t i = 0; i < max_len; ++i) {
    auto col = out.subspan(i * channels, channels);
    if (i < t.size() && t.is_wildcard(i)) continue;
    const std::size_t hot = i < t.size() ? symbol_index(a, t.cell(i)) : a.pad_index();
    col[hot] = 1.0f;
    if (smoothing > 0.0) {
      if (rng != nullptr) {
        smooth_column(col, smoothing, *rng);
      } else {
        smooth_column_mean(col, smoothing);
      }
    }
  }
}

EncodedMatrix encode(const Password& x, const Alphabet& a, std::size_t max_len,
                     double smoothing, Rng& rng) {
  if (x.size() > max_len) throw Error("over-length");
  if (smoothing < 0.0 || smoothing >= 1.0) throw Error("smoothing must lie in [0, 1)");
  EncodedMatrix m(max_len, a.channels());
  encode_into(m.values(), Template::of(x), a, max_len, smoothing, &rng);
  return m;
}

EncodedMatrix encode(const Password& x, const Alphabet& a, std::size_t max_len) {
  Rng unused(0);
  return encode(x, a, max_len, 0.0, unused);
}

EncodedMatrix encode_template(const Template& t, const Alphabet& a,
                              std::size_t max_len) {
  if (t.size() > max_len) throw Error("over-length");
  EncodedMatrix m(max_len, a.channels());
  encode_into(m.values(), t, a, max_len, 0.0, nullptr);
  for (std::size_t i = 0; i < t.size(); ++i) m.set_wildcard(i, t.is_wildcard(i));
  return m;
}

Password decode_indices(std::span<const std::uint32_t> argmax, const Alphabet& a) {
  Password out;
  for (std::uint32_t idx : argmax) {
    if (idx >= a.pad_index()) break;
    out.push_back(a.symbol(idx));
  }
  return out;
}

Password decode(const EncodedMatrix& m, const Alphabet& a) {
  if (m.channels() != a.channels()) throw Error("decode: channel count mismatch");
  std::vector<std::uint32_t> argmax(m.length());
  for (std::size_t i = 0; i < m.length(); ++i) {
    auto col = m.column(i);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    argmax[i] = static_cast<std::uint32_t>(
        std::max_element(col.begin(), col.end()) - col.begin());
  }
  Password out = decode_indices(argmax, a);
  if (out.empty()) throw Error("empty decode");
  return out;
}

// ---------------------------------------------------------------------------
// Matching and noise

bool matches(std::u32string_view x, const Template& t) {
  if (x.size() != t.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!t.is_wildcard(i) && t.cell(i) != x[i]) return false;
  }
  return true;
}

Template wildcard_each(const Password& x, double p, Rng& rng) {
  std::u32string cells = x;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& c : cells) {
    if (u(rng) < p) c = kWildcardSymbol;
  }
  return Template(std::move(cells));
}

Template context_noise(const Password& x, double epsilon, Rng& rng) {
  if (epsilon < 0.0) throw Error("context noise: epsilon must be >= 0");
  if (x.empty()) return Template(x);
  const double p = std::min(1.0, epsilon / static_cast<double>(x.size()));
  return wildcard_each(x, p, rng);
}

Template span_mask_at(const Password& x, std::size_t k, std::size_t start) {
  std::u32string cells = x;
  for (std::size_t i = start; i < std::min(start + k, cells.size()); ++i) {
    cells[i] = kWildcardSymbol;
  }
  return Template(std::move(cells));
}

Template span_mask_noise(const Password& x, std::size_t k, Rng& rng) {
  if (k < 1) throw Error("span mask: k must be >= 1");
  const std::size_t last = x.size() > k ? x.size() - k : 0;
  std::uniform_int_distribution<std::size_t> start(0, last);
  return span_mask_at(x, k, start(rng));
}

}  // namespace latentpass
