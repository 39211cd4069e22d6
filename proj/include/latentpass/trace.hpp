#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace latentpass {

enum class AttackMode { kStatic, kCpg, kDpg };

std::string to_string(AttackMode mode);

struct TracePoint {
  std::uint64_t guess_index = 0;  // 1-based
  std::uint64_t matches = 0;      // cumulative unique matches
};

/// Match-versus-guesses curve of one attack run.
class AttackTrace {
 public:
  AttackTrace() = default;
  AttackTrace(AttackMode mode, std::uint64_t budget, std::uint64_t seed)
      : mode_(mode), budget_(budget), seed_(seed) {}

  /// Appends a point; a repeated guess index overwrites the last point.
  /// Throws when the index goes backwards or matches decrease.
  void record(std::uint64_t guess_index, std::uint64_t matches);

  const std::vector<TracePoint>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  std::uint64_t final_matches() const { return points_.empty() ? 0 : points_.back().matches; }
  std::uint64_t final_guesses() const { return points_.empty() ? 0 : points_.back().guess_index; }
  /// Cumulative matches after `guesses` guesses (step interpolation).
  std::uint64_t matches_at(std::uint64_t guesses) const;

  AttackMode mode() const { return mode_; }
  std::uint64_t budget() const { return budget_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  /// Checks index strictly increasing, matches non-decreasing, within budget.
  bool well_formed() const;

  /// "guess_index,matches" rows under a header.
  void write_csv(std::ostream& out) const;

 private:
  AttackMode mode_ = AttackMode::kStatic;
  std::uint64_t budget_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<TracePoint> points_;
};

}  // namespace latentpass
