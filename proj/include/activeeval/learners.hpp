#pragma once

// Dueling-bandit learners behind one select / update / recommend contract.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "activeeval/core.hpp"
#include "activeeval/errors.hpp"
#include "activeeval/rng.hpp"
#include "json.hpp"

namespace activeeval {

enum class Algorithm {
  kUniform,
  kIF,
  kBTM,
  kSequentialElimination,
  kPlackettLuce,
  kKnockout,
  kSingleElimination,
  kRUCB,
  kRCS,
  kRMED,
  kSAVAGE,
  kCCB,
  kDTS,
  kDTSPlusPlus,
};

std::string_view algorithm_name(Algorithm a);
// Case-insensitive; accepts canonical names and a few aliases ("dtspp").
Algorithm parse_algorithm(std::string_view name);
const std::vector<Algorithm>& all_algorithms();

struct AlgorithmSpec {
  Algorithm variant = Algorithm::kUniform;
  std::map<std::string, double> hyperparameters;

  // Value of `key`, or `fallback` when absent.
  double get(const std::string& key, double fallback) const;

  // "rmed" or {"name": "rmed", "alpha": ...}.
  static AlgorithmSpec from_json(const nlohmann::json& j);
  static AlgorithmSpec named(std::string_view name) { return {parse_algorithm(name), {}}; }
  nlohmann::json to_json() const;
};

// Default hyperparameters for a variant; unknown keys in a spec are rejected
// against this table.
std::map<std::string, double> default_hyperparameters(Algorithm a);

// Thrown by select_pair on a learner that has declared a winner.
class TerminatedError : public Error {
 public:
  explicit TerminatedError(SystemId winner)
      : Error("learner terminated with winner " + std::to_string(winner)), winner_(winner) {}
  SystemId winner() const noexcept { return winner_; }

 private:
  SystemId winner_;
};

class Learner {
 public:
  Learner(AlgorithmSpec spec, int k, std::uint64_t seed);
  virtual ~Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  // Ordered pair of distinct systems. Throws TerminatedError once a winner is
  // declared.
  Pair select_pair();

  // Applies one outcome. Outcomes may arrive late and out of order relative
  // to selections; after termination only the counts change.
  void update(const ComparisonOutcome& outcome);

  // Declared winner if any, else the empirical Copeland winner (lowest index
  // on ties).
  SystemId recommend() const;

  bool terminated() const { return winner_.has_value(); }
  std::optional<SystemId> declared_winner() const { return winner_; }

  int k() const { return k_; }
  std::uint64_t seed() const { return seed_; }
  const AlgorithmSpec& spec() const { return spec_; }
  const WinCountMatrix& counts() const { return counts_; }
  std::int64_t selections() const { return selections_; }

  // Systems still in contention; all systems for non-eliminating variants.
  virtual std::vector<SystemId> active_set() const;

  // Snapshots are replay journals: the spec, seed and the exact sequence of
  // select / update calls. restore_learner replays and checks every selection.
  void set_journaling(bool on) { journaling_ = on; }
  bool journaling() const { return journaling_; }
  nlohmann::json snapshot() const;

 protected:
  virtual Pair do_select() = 0;
  virtual void on_update(const ComparisonOutcome& outcome) { (void)outcome; }

  void declare(SystemId winner) { winner_ = winner; }
  Rng& rng() { return rng_; }
  // Time index used in confidence bounds: applied outcomes + 1.
  double time_index() const { return static_cast<double>(counts_.total_trials() + 1); }

  // Upper / lower confidence bounds W/N +- sqrt(alpha ln t / N); 1 and 0 with
  // no trials, 0.5 on the diagonal.
  double upper(SystemId i, SystemId j, double alpha) const;
  double lower(SystemId i, SystemId j, double alpha) const;

  // Index of a maximal element, uniform among ties.
  std::size_t argmax_random(const std::vector<double>& v);
  std::size_t argmax_random(const std::vector<double>& v, const std::vector<bool>& allowed);

 private:
  struct Event {
    bool is_select;
    Pair pair;
    double value;
    Source source;
  };

  AlgorithmSpec spec_;
  int k_;
  std::uint64_t seed_;
  Rng rng_;
  WinCountMatrix counts_;
  std::optional<SystemId> winner_;
  std::int64_t selections_ = 0;
  bool journaling_ = true;
  std::vector<Event> journal_;
};

// Throws ConfigError on unknown hyperparameters or values out of range.
std::unique_ptr<Learner> create_learner(const AlgorithmSpec& spec, int k, std::uint64_t seed);

// Rebuilds a learner from snapshot(); throws ConfigError if the journal does
// not replay to the recorded selections.
std::unique_ptr<Learner> restore_learner(const nlohmann::json& snapshot);

}  // namespace activeeval
