#pragma once

// Hybrids that combine metric predictions with human judgments: random
// mixing, uncertainty-gated feedback (BALD or standard deviation), and
// up-front elimination by optimistic Copeland scores.

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "activeeval/core.hpp"
#include "activeeval/learners.hpp"
#include "activeeval/metric_oracle.hpp"
#include "activeeval/probability_models.hpp"
#include "activeeval/rng.hpp"

namespace activeeval {

enum class EntropyBase { kNat, kBit };

double binary_entropy(double p, EntropyBase base = EntropyBase::kNat);

// H(mean p) - mean H(p_l). Throws DegenerateInputError on an empty list.
double bald_score(const std::vector<double>& samples, EntropyBase base = EntropyBase::kNat);

// Population standard deviation.
double std_score(const std::vector<double>& samples);

struct RandomMixingConfig {
  double p_m = 0.8;
};

enum class UncertaintyMeasure { kBald, kStd };

struct UncertaintyConfig {
  UncertaintyMeasure measure = UncertaintyMeasure::kBald;
  double threshold = 0.0;
};

double uncertainty(const UncertaintyConfig& cfg, const PairwisePrediction& prediction);

using HumanQuery = std::function<ComparisonOutcome()>;

// With probability p_m the predicted outcome (source model), otherwise the
// human query.
ComparisonOutcome random_mixing_feedback(const RandomMixingConfig& cfg,
                                         const PairwisePrediction& prediction,
                                         const HumanQuery& human, Rng& rng);

// Human when the uncertainty strictly exceeds the threshold, else the
// prediction. Throws ConfigError when the prediction has no samples.
ComparisonOutcome uncertainty_gated_feedback(const UncertaintyConfig& cfg,
                                             const PairwisePrediction& prediction,
                                             const HumanQuery& human);

// Threshold at the (1 - human_fraction) quantile of `scores`, so that about
// human_fraction of them lie strictly above it.
double threshold_for_human_fraction(std::vector<double> scores, double human_fraction);

// Mixing rate by validation accuracy: 0.8 at or above 70%, 0.5 to 0.7
// linearly between 65% and 70%, 0 below.
double mixing_rate_for_accuracy(double accuracy);

struct UcbEliminationConfig {
  double alpha = 0.6;
  double copeland_threshold = 0.8;
};

struct EliminationReport {
  int k = 0;
  std::vector<double> p_hat;   // k x k, row-major
  std::vector<double> sigma;   // k x k
  std::vector<double> upper;   // k x k
  std::vector<std::size_t> n;  // k x k, examples used
  std::vector<double> optimistic_copeland;
  std::vector<bool> survived;

  std::vector<SystemId> survivors() const;
  // One row per ordered pair: system, opponent, p_hat, sigma, upper,
  // examples, then the system's optimistic Copeland score and survived flag.
  void write_csv(std::ostream& out, const Roster& roster) const;
  nlohmann::json to_json(const Roster& roster) const;
};

// Example sets per unordered pair (indexed by pair_index); nullptr uses every
// example where both systems have entries.
using ExampleSets = std::vector<std::vector<std::size_t>>;

// OpenMP over pairs.
EliminationReport ucb_eliminate(const MetricScoreTable& table, const PairwiseModel& model,
                                const UcbEliminationConfig& cfg,
                                const ExampleSets* examples = nullptr);
// Single-threaded reference with identical output.
EliminationReport ucb_eliminate_serial(const MetricScoreTable& table, const PairwiseModel& model,
                                       const UcbEliminationConfig& cfg,
                                       const ExampleSets* examples = nullptr);

enum class FeedbackPolicy { kHumanOnly, kRandomMixing, kUncertaintyGated };

std::string_view feedback_policy_name(FeedbackPolicy p);
FeedbackPolicy parse_feedback_policy(std::string_view name);

struct ComposeConfig {
  FeedbackPolicy policy = FeedbackPolicy::kHumanOnly;
  RandomMixingConfig mixing;
  UncertaintyConfig gating;
};

// A learner over a subset of systems with ids mapped back to the full
// roster, plus the feedback policy that wraps every human query.
class ComposedLearner {
 public:
  ComposedLearner(const AlgorithmSpec& base, int k, std::uint64_t seed,
                  std::vector<SystemId> survivors, ComposeConfig cfg);

  int k() const { return k_; }
  const std::vector<SystemId>& survivors() const { return survivors_; }
  bool terminated() const { return !inner_ || inner_->terminated(); }
  // Throws TerminatedError, including when a single system survives.
  Pair select_pair();
  // Outcomes touching eliminated systems are ignored.
  void update(const ComparisonOutcome& outcome);
  SystemId recommend() const;
  // `prediction` may be null only under the human-only policy.
  ComparisonOutcome feedback(const PairwisePrediction* prediction, const HumanQuery& human,
                             Rng& rng) const;
  const ComposeConfig& config() const { return cfg_; }
  Learner* inner() { return inner_.get(); }
  const Learner* inner() const { return inner_.get(); }

 private:
  int k_;
  std::vector<SystemId> survivors_;
  std::vector<int> local_;  // original id -> inner id, -1 when eliminated
  std::unique_ptr<Learner> inner_;
  ComposeConfig cfg_;
};

// survivors empty means every system.
std::unique_ptr<ComposedLearner> compose(const AlgorithmSpec& base, int k, std::uint64_t seed,
                                         std::vector<SystemId> survivors, ComposeConfig cfg);

}  // namespace activeeval
