#include "activeeval/core.hpp"

#include <cmath>
#include <stdexcept>

#include "activeeval/errors.hpp"

namespace activeeval {

std::string_view source_name(Source s) {
  return s == Source::kHuman ? "human" : "model";
}

Source parse_source(std::string_view name) {
  if (name == "human") return Source::kHuman;
  if (name == "model") return Source::kModel;
  throw ConfigError("unknown outcome source '" + std::string(name) + "'");
}

bool is_valid_outcome_value(double value) {
  return value == 0.0 || value == 0.5 || value == 1.0;
}

void check_system(int k, SystemId id) {
  if (id < 0 || id >= k) {
    throw IndexError("system id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(k) + ")");
  }
}

std::size_t pair_index(int k, SystemId i, SystemId j) {
  check_system(k, i);
  check_system(k, j);
  if (i == j) throw IndexError("pair_index of identical systems");
  if (i > j) std::swap(i, j);
  const auto kk = static_cast<std::size_t>(k);
  const auto a = static_cast<std::size_t>(i);
  const auto b = static_cast<std::size_t>(j);
  // Rows before `a` hold (k-1) + (k-2) + ... + (k-a) pairs.
  return a * kk - a * (a + 1) / 2 + (b - a - 1);
}

Pair pair_at(int k, std::size_t index) {
  if (index >= num_pairs(k)) throw IndexError("pair index out of range");
  SystemId a = 0;
  std::size_t row = static_cast<std::size_t>(k - 1);
  while (index >= row) {
    index -= row;
    --row;
    ++a;
  }
  return {a, a + 1 + static_cast<SystemId>(index)};
}

PreferenceMatrix::PreferenceMatrix(int k) : k_(k), p_(static_cast<std::size_t>(k) * k, 0.5) {
  if (k < 2) throw ConfigError("a preference matrix needs k >= 2");
}

PreferenceMatrix PreferenceMatrix::from_rows(int k, const std::vector<double>& rows) {
  PreferenceMatrix m(k);
  if (rows.size() != static_cast<std::size_t>(k) * k) {
    throw ConfigError("preference matrix needs k*k entries");
  }
  for (SystemId i = 0; i < k; ++i) {
    for (SystemId j = 0; j < k; ++j) {
      const double p = rows[static_cast<std::size_t>(i) * k + j];
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("preference outside [0, 1]");
      if (i == j && p != 0.5) throw ConfigError("diagonal preference must be 0.5");
      const double q = rows[static_cast<std::size_t>(j) * k + i];
      if (std::abs(p + q - 1.0) > 1e-12) throw ConfigError("p_ij + p_ji must equal 1");
      m.p_[m.idx(i, j)] = p;
    }
  }
  return m;
}

PreferenceMatrix PreferenceMatrix::from_btl(const std::vector<double>& utilities) {
  const int k = static_cast<int>(utilities.size());
  PreferenceMatrix m(k);
  for (double u : utilities) {
    if (!(u > 0.0) || !std::isfinite(u)) throw ConfigError("BTL utilities must be positive");
  }
  for (SystemId i = 0; i < k; ++i) {
    for (SystemId j = i + 1; j < k; ++j) {
      m.set(i, j, utilities[i] / (utilities[i] + utilities[j]));
    }
  }
  return m;
}

void PreferenceMatrix::set(SystemId i, SystemId j, double p) {
  check_system(k_, i);
  check_system(k_, j);
  if (i == j) throw IndexError("cannot set a diagonal preference");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("preference outside [0, 1]");
  p_[idx(i, j)] = p;
  p_[idx(j, i)] = 1.0 - p;
}

PreferenceMatrix PreferenceMatrix::with_ties(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("tie probability outside [0, 1]");
  PreferenceMatrix m(k_);
  for (SystemId i = 0; i < k_; ++i) {
    for (SystemId j = i + 1; j < k_; ++j) m.set(i, j, (1.0 - t) * (*this)(i, j) + 0.5 * t);
  }
  return m;
}

WinCountMatrix::WinCountMatrix(int k)
    : k_(k),
      wins_(static_cast<std::size_t>(k) * k, 0.0),
      trials_(static_cast<std::size_t>(k) * k, 0) {
  if (k < 2) throw ConfigError("a count matrix needs k >= 2");
}

double WinCountMatrix::estimate(SystemId i, SystemId j) const {
  const auto n = trials_[idx(i, j)];
  return n > 0 ? wins_[idx(i, j)] / static_cast<double>(n) : 0.5;
}

void WinCountMatrix::record(Pair pair, double value) {
  check_system(k_, pair.first);
  check_system(k_, pair.second);
  if (pair.first == pair.second) throw IndexError("cannot record a self-comparison");
  if (!is_valid_outcome_value(value)) {
    throw std::invalid_argument("outcome value must be 0, 0.5 or 1");
  }
  wins_[idx(pair.first, pair.second)] += value;
  wins_[idx(pair.second, pair.first)] += 1.0 - value;
  ++trials_[idx(pair.first, pair.second)];
  ++trials_[idx(pair.second, pair.first)];
  ++total_;
}

WinCountMatrix WinCountMatrix::from_raw(int k, std::vector<double> wins,
                                        std::vector<std::int64_t> trials) {
  WinCountMatrix c(k);
  const auto n = static_cast<std::size_t>(k) * k;
  if (wins.size() != n || trials.size() != n) throw ConfigError("count matrix size mismatch");
  std::int64_t total = 0;
  for (SystemId i = 0; i < k; ++i) {
    for (SystemId j = 0; j < k; ++j) {
      const auto a = c.idx(i, j);
      const auto b = c.idx(j, i);
      if (trials[a] != trials[b] || wins[a] < 0.0 || wins[a] > static_cast<double>(trials[a]) ||
          wins[a] + wins[b] != static_cast<double>(trials[a])) {
        throw ConfigError("inconsistent count matrix");
      }
      if (i < j) total += trials[a];
    }
  }
  c.wins_ = std::move(wins);
  c.trials_ = std::move(trials);
  c.total_ = total;
  return c;
}

std::optional<SystemId> condorcet_winner(const PreferenceMatrix& m) {
  for (SystemId i = 0; i < m.k(); ++i) {
    bool beats_all = true;
    for (SystemId j = 0; j < m.k() && beats_all; ++j) {
      if (j != i && !(m(i, j) > 0.5)) beats_all = false;
    }
    if (beats_all) return i;
  }
  return std::nullopt;
}

CopelandScores copeland_scores(const PreferenceMatrix& m) {
  const int k = m.k();
  CopelandScores scores(static_cast<std::size_t>(k), 0.0);
  for (SystemId i = 0; i < k; ++i) {
    int wins = 0;
    for (SystemId j = 0; j < k; ++j) {
      if (j != i && m(i, j) > 0.5) ++wins;
    }
    scores[i] = static_cast<double>(wins) / static_cast<double>(k - 1);
  }
  return scores;
}

CopelandScores copeland_scores(const WinCountMatrix& counts) {
  const int k = counts.k();
  CopelandScores scores(static_cast<std::size_t>(k), 0.0);
  for (SystemId i = 0; i < k; ++i) {
    int wins = 0;
    for (SystemId j = 0; j < k; ++j) {
      // wins/n > 1/2 without division; wins are multiples of 0.5 so this is exact.
      if (j != i && 2.0 * counts.wins(i, j) > static_cast<double>(counts.trials(i, j))) ++wins;
    }
    scores[i] = static_cast<double>(wins) / static_cast<double>(k - 1);
  }
  return scores;
}

SystemId copeland_winner(const CopelandScores& scores) {
  SystemId best = 0;
  for (SystemId i = 1; i < static_cast<SystemId>(scores.size()); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

PreferenceMatrix empirical_preferences(const WinCountMatrix& counts) {
  PreferenceMatrix m(counts.k());
  for (SystemId i = 0; i < counts.k(); ++i) {
    for (SystemId j = i + 1; j < counts.k(); ++j) m.set(i, j, counts.estimate(i, j));
  }
  return m;
}

WinCountMatrix update_counts(WinCountMatrix counts, const ComparisonOutcome& outcome) {
  counts.record(outcome.pair, outcome.value);
  return counts;
}

}  // namespace activeeval
