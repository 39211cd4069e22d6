#include "latentpass/synthetic.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace latentpass {

namespace {

constexpr std::array<std::string_view, 120> kNames = {
    "michael", "jessica", "ashley", "daniel", "jennifer", "joshua", "amanda", "david",
    "andrew", "justin", "robert", "jordan", "nicole", "thomas", "hannah", "matthew",
    "anthony", "charlie", "maria", "jasmine", "samantha", "tigger", "jimmy", "brandon",
    "william", "taylor", "james", "elizabeth", "melissa", "alexander", "christian", "kevin",
    "lauren", "rachel", "stephanie", "heather", "michelle", "richard", "carlos", "jose",
    "angel", "diana", "sarah", "laura", "chris", "steven", "patrick", "victoria",
    "natalie", "peter", "george", "alex", "bella", "emily", "sophie", "oliver",
    "jack", "lucas", "mark", "paul", "linda", "karen", "susan", "lisa",
    "nancy", "betty", "sandra", "donna", "carol", "ruth", "sharon", "kim",
    "anna", "emma", "olivia", "ava", "mia", "chloe", "grace", "lily",
    "ella", "zoe", "leo", "max", "sam", "ben", "tom", "joe",
    "adam", "ryan", "eric", "tyler", "aaron", "kyle", "sean", "adrian",
    "marco", "pedro", "juan", "luis", "miguel", "antonio", "rosa", "carmen",
    "sofia", "lucia", "paula", "irene", "andrea", "monica", "tina", "nina",
    "lola", "rocky", "buster", "ginger", "shadow", "coco", "lucky", "molly"};

constexpr std::array<std::string_view, 120> kWords = {
    "password", "iloveyou", "princess", "monkey", "dragon", "sunshine", "shadow", "master",
    "football", "baseball", "soccer", "hockey", "lovely", "flower", "butterfly", "superman",
    "batman", "pokemon", "starwars", "cookie", "chocolate", "summer", "winter", "spring",
    "angel", "love", "baby", "secret", "freedom", "whatever", "trustno1", "letmein",
    "welcome", "hello", "killer", "pepper", "ginger", "cheese", "banana", "orange",
    "purple", "yellow", "silver", "golden", "diamond", "hunter", "ranger", "soldier",
    "tiger", "lion", "eagle", "falcon", "phoenix", "wizard", "magic", "ninja",
    "pirate", "rocket", "thunder", "storm", "ocean", "river", "forest", "mountain",
    "music", "guitar", "piano", "dance", "happy", "smile", "sweet", "honey",
    "sugar", "candy", "cherry", "apple", "lemon", "peach", "mango", "kitty",
    "puppy", "doggie", "horse", "bunny", "turtle", "panda", "monster", "zombie",
    "matrix", "hacker", "gamer", "player", "winner", "champion", "legend", "hero",
    "queen", "king", "prince", "lady", "sexy", "beauty", "babygirl", "angels",
    "friends", "family", "forever", "always", "heaven", "jesus", "faith", "blessed",
    "chelsea", "arsenal", "liverpool", "barcelona", "yankees", "lakers", "cowboys", "eagles"};

constexpr std::array<std::string_view, 40> kCommonDigits = {
    "123456", "12345", "123456789", "12345678", "1234567", "111111", "000000", "654321",
    "1234", "123123", "121212", "666666", "7777777", "112233", "123321", "987654321",
    "1234567890", "159753", "147258369", "555555", "999999", "888888", "222222", "131313",
    "101010", "456789", "789456", "123654", "741852963", "102030", "11111", "1111",
    "0000", "2580", "147258", "159357", "696969", "420420", "232323", "852456"};

constexpr std::array<std::string_view, 24> kWalks = {
    "qwerty", "asdfgh", "zxcvbnm", "qwertyuiop", "asdfghjkl", "1qaz2wsx", "qazwsx", "qweasd",
    "asdasd", "zaq12wsx", "qwer1234", "1q2w3e4r", "1q2w3e", "qwe123", "asd123", "zxc123",
    "qwertz", "azerty", "poiuyt", "mnbvcxz", "lkjhgf", "wasd", "abc123", "abcdef"};

constexpr std::string_view kSymbols = "!@#$%&*.?_-";

/// Zipf(s) index over [0, n) by inverse transform on precomputed weights.
class Zipf {
 public:
  Zipf(std::size_t n, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cumulative_.push_back(acc += 1.0 / std::pow(i + 1.0, s));
  }
  std::size_t operator()(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, cumulative_.back());
    const double x = u(rng);
    std::size_t lo = 0;
    std::size_t hi = cumulative_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative_[mid] < x) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

 private:
  std::vector<double> cumulative_;
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed)
      : rng_(seed), names_(kNames.size(), 1.0), words_(kWords.size(), 1.0),
        digits_(kCommonDigits.size(), 1.1), walks_(kWalks.size(), 1.0) {}

  std::string draw() {
    static constexpr std::array<double, 12> kRuleWeights = {
        0.22, 0.10, 0.10, 0.06, 0.12, 0.05, 0.05, 0.07, 0.05, 0.06, 0.04, 0.08};
    std::discrete_distribution<int> rule(kRuleWeights.begin(), kRuleWeights.end());
    switch (rule(rng_)) {
      case 0: return name() + suffix();
      case 1: return word();
      case 2: return word() + suffix();
      case 3: return capital(coin(0.5) ? name() : word()) + suffix();
      case 4: return all_digits();
      case 5: return std::string(kWalks[walks_(rng_)]) + (coin(0.4) ? suffix() : "");
      case 6: return leet(coin(0.5) ? word() : name()) + (coin(0.5) ? suffix() : "");
      case 7: return coin(0.5) ? "ilove" + (coin(0.6) ? name() : word()) : word() + word();
      case 8: return (coin(0.5) ? word() : name()) + symbol() + (coin(0.7) ? suffix() : "");
      case 9: return name() + name();
      case 10: return upper(coin(0.5) ? name() : word()) + suffix();
      default: return random_tail();
    }
  }

 private:
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::string name() { return std::string(kNames[names_(rng_)]); }
  std::string word() { return std::string(kWords[words_(rng_)]); }
  std::string symbol() { return std::string(1, kSymbols[uniform(0, static_cast<int>(kSymbols.size()) - 1)]); }

  std::string two(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
  }

  std::string suffix() {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    if (u < 0.18) return std::to_string(uniform(0, 9));
    if (u < 0.40) return two(uniform(0, 99));
    if (u < 0.62) return std::to_string(uniform(1960, 2012));
    if (u < 0.74) return two(uniform(60, 99));
    if (u < 0.86) return "123";
    if (u < 0.93) return "1";
    return std::to_string(uniform(100, 999));
  }

  std::string all_digits() {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    if (u < 0.45) return std::string(kCommonDigits[digits_(rng_)]);
    if (u < 0.70) {
      const int d = uniform(1, 28);
      const int mth = uniform(1, 12);
      const int y = uniform(1960, 2012);
      switch (uniform(0, 2)) {
        case 0: return two(d) + two(mth) + two(y % 100);
        case 1: return two(mth) + two(d) + std::to_string(y);
        default: return two(d) + two(mth) + std::to_string(y);
      }
    }
    if (u < 0.85) {
      const char a = static_cast<char>('0' + uniform(0, 9));
      const char b = static_cast<char>('0' + uniform(0, 9));
      const int reps = uniform(2, 4);
      std::string s;
      for (int i = 0; i < reps; ++i) {
        s += a;
        s += b;
      }
      return s;
    }
    std::string s;
    const int len = uniform(4, 10);
    for (int i = 0; i < len; ++i) s += static_cast<char>('0' + uniform(0, 9));
    return s;
  }

  static std::string capital(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
  }

  static std::string upper(std::string s) {
    for (auto& c : s) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return s;
  }

  std::string leet(std::string s) {
    for (auto& c : s) {
      if (!coin(0.7)) continue;
      switch (c) {
        case 'a': c = '@'; break;
        case 'e': c = '3'; break;
        case 'i': c = '1'; break;
        case 'o': c = '0'; break;
        case 's': c = '$'; break;
        default: break;
      }
    }
    return s;
  }

  std::string random_tail() {
    static constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string s;
    const int len = uniform(6, 10);
    for (int i = 0; i < len; ++i) s += kAlnum[uniform(0, static_cast<int>(kAlnum.size()) - 1)];
    return s;
  }

  Rng rng_;
  Zipf names_;
  Zipf words_;
  Zipf digits_;
  Zipf walks_;
};

Alphabet printable_ascii() {
  std::vector<Password> all(1);
  for (char32_t c = 33; c < 127; ++c) all[0].push_back(c);
  return build_alphabet(std::span<const Password>(all));
}

}  // namespace

LeakDataset synthetic_leak(const SyntheticLeakOptions& options) {
  if (options.draws < 1) throw Error("synthetic leak: draws must be >= 1");
  if (options.max_len < 1) throw Error("synthetic leak: max_len must be >= 1");
  Generator gen(options.seed);
  std::vector<Password> passwords;
  passwords.reserve(options.draws);
  while (passwords.size() < options.draws) {
    std::string s = gen.draw();
    if (s.empty() || s.size() > options.max_len) continue;
    passwords.push_back(utf8_to_u32(s));
  }
  return make_dataset(std::move(passwords), printable_ascii(), options.max_len,
                      "synthetic:" + std::to_string(options.seed));
}

}  // namespace latentpass
