#pragma once

// Shared domain types: systems, comparison outcomes, preference and win-count
// matrices, Condorcet/Copeland computations.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace activeeval {

// Dense index in [0, k).
using SystemId = int;

// An ordered pair of systems. Outcome value 1 means `first` won.
struct Pair {
  SystemId first = 0;
  SystemId second = 0;

  Pair swapped() const { return {second, first}; }
  friend bool operator==(const Pair&, const Pair&) = default;
};

enum class Source { kHuman, kModel };

std::string_view source_name(Source s);
Source parse_source(std::string_view name);

// w in {0, 0.5, 1}.
bool is_valid_outcome_value(double value);

struct ComparisonOutcome {
  Pair pair;
  double value = 0.5;
  Source source = Source::kHuman;
  std::string example_id;
};

// Number of unordered pairs, k choose 2.
inline std::size_t num_pairs(int k) {
  return static_cast<std::size_t>(k) * static_cast<std::size_t>(k - 1) / 2;
}

// Index of the unordered pair {i, j} (i != j) in row-major upper-triangle order.
std::size_t pair_index(int k, SystemId i, SystemId j);

// Inverse of pair_index, returned with first < second.
Pair pair_at(int k, std::size_t index);

// k x k matrix with p_ij + p_ji = 1 and p_ii = 0.5.
class PreferenceMatrix {
 public:
  explicit PreferenceMatrix(int k);

  // Builds from a full row-major k*k array; validates every invariant.
  static PreferenceMatrix from_rows(int k, const std::vector<double>& rows);

  // u_i / (u_i + u_j); all utilities must be strictly positive.
  static PreferenceMatrix from_btl(const std::vector<double>& utilities);

  int k() const { return k_; }
  double operator()(SystemId i, SystemId j) const { return p_[idx(i, j)]; }

  // Sets p_ij and the complementary p_ji.
  void set(SystemId i, SystemId j, double p);

  // Mixes each off-diagonal entry with tie mass t: (1 - t) p + t / 2. This is
  // the expected fractional-win rate when ties count as half a win.
  PreferenceMatrix with_ties(double tie_probability) const;

 private:
  std::size_t idx(SystemId i, SystemId j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) +
           static_cast<std::size_t>(j);
  }
  int k_;
  std::vector<double> p_;
};

// Sufficient statistic for every learner. A tie adds 0.5 to both directions.
class WinCountMatrix {
 public:
  explicit WinCountMatrix(int k = 2);

  int k() const { return k_; }
  double wins(SystemId i, SystemId j) const { return wins_[idx(i, j)]; }
  std::int64_t trials(SystemId i, SystemId j) const { return trials_[idx(i, j)]; }

  // wins_ij / trials_ij, or 0.5 with no trials.
  double estimate(SystemId i, SystemId j) const;

  // Throws IndexError on out-of-range or equal ids, std::invalid_argument on a
  // value outside {0, 0.5, 1}.
  void record(Pair pair, double value);

  std::int64_t total_trials() const { return total_; }

  // Reconstruction for snapshots.
  const std::vector<double>& raw_wins() const { return wins_; }
  const std::vector<std::int64_t>& raw_trials() const { return trials_; }
  static WinCountMatrix from_raw(int k, std::vector<double> wins,
                                 std::vector<std::int64_t> trials);

  friend bool operator==(const WinCountMatrix&, const WinCountMatrix&) = default;

 private:
  std::size_t idx(SystemId i, SystemId j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) +
           static_cast<std::size_t>(j);
  }
  int k_;
  std::vector<double> wins_;
  std::vector<std::int64_t> trials_;
  std::int64_t total_ = 0;
};

using CopelandScores = std::vector<double>;

// Returns i* iff p_{i*j} > 0.5 for all j != i*.
std::optional<SystemId> condorcet_winner(const PreferenceMatrix& m);

// score_i = |{j != i : p_ij > 0.5}| / (k - 1).
CopelandScores copeland_scores(const PreferenceMatrix& m);

// Same scores computed from empirical estimates of a count matrix.
CopelandScores copeland_scores(const WinCountMatrix& counts);

// Argmax with lowest-index tie-break.
SystemId copeland_winner(const CopelandScores& scores);

PreferenceMatrix empirical_preferences(const WinCountMatrix& counts);

// Functional form: returns a copy with the outcome applied.
WinCountMatrix update_counts(WinCountMatrix counts, const ComparisonOutcome& outcome);

void check_system(int k, SystemId id);

}  // namespace activeeval
