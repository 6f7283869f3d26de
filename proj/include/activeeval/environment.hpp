#pragma once

// Simulated annotators: empirical judgment datasets, synthetic preference
// matrices, a latent-quality corpus with a matching synthetic metric, plus
// delayed-feedback and multi-annotator wrappers.

#include <atomic>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "activeeval/core.hpp"
#include "activeeval/metric_oracle.hpp"
#include "activeeval/probability_models.hpp"
#include "activeeval/rng.hpp"

namespace activeeval {

// One sampled judgment: the context it was drawn for and the outcome for the
// requested pair order. Drawing is free; only consuming counts as a human
// annotation.
struct Draw {
  std::size_t example = 0;
  double value = 0.5;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int k() const = 0;
  virtual Draw draw(Pair pair, Rng& rng) const = 0;
  virtual std::string example_id(std::size_t example) const;
  // Expected outcome matrix (ties count half); the ground truth is its
  // Condorcet winner.
  virtual PreferenceMatrix preference_matrix() const = 0;
  std::optional<SystemId> condorcet_winner() const;
};

// ---- empirical judgments ---------------------------------------------------

struct JudgmentRecord {
  std::string example;
  std::string system_a;
  std::string system_b;
  double outcome = 0.5;  // 1 means system_a preferred
};

class JudgmentDataset final : public Environment {
 public:
  // Stores records canonically with the lower SystemId first.
  static JudgmentDataset from_records(const std::vector<JudgmentRecord>& records);
  // Schema {example_id, system_a, system_b, outcome}; line-numbered errors.
  static JudgmentDataset read_jsonl(std::istream& in);

  int k() const override { return roster_.size(); }
  const Roster& roster() const { return roster_; }
  std::size_t size() const { return total_; }
  std::size_t count(SystemId a, SystemId b) const;

  // Uniform recorded judgment for the pair, orientation corrected. Throws
  // CoverageError for an uncovered pair.
  Draw draw(Pair pair, Rng& rng) const override;
  std::string example_id(std::size_t example) const override { return examples_.at(example); }
  const std::vector<std::string>& examples() const { return examples_; }

  std::vector<Pair> uncovered_pairs() const;
  // Throws CoverageError listing every uncovered pair.
  void check_coverage() const;
  PreferenceMatrix preference_matrix() const override;

 private:
  struct Stored {
    std::uint32_t example;
    double value;  // for the canonical (lower, higher) order
  };
  Roster roster_;
  std::vector<std::string> examples_;
  std::vector<std::vector<Stored>> by_pair_;  // indexed by pair_index
  std::size_t total_ = 0;
};

ComparisonOutcome sample_judgment(const JudgmentDataset& ds, Pair pair, Rng& rng);

// Ranked list (best first) or numeric scores (higher better) for one example
// converted into all pairwise judgments; equal ranks or scores are ties.
std::vector<JudgmentRecord> ranks_to_judgments(const std::string& example,
                                               const std::vector<std::string>& systems,
                                               const std::vector<double>& ranks);
std::vector<JudgmentRecord> scores_to_judgments(const std::string& example,
                                                const std::vector<std::string>& systems,
                                                const std::vector<double>& scores);

// ---- synthetic preference matrices -----------------------------------------

struct SyntheticSpec {
  enum class Generator { kMatrix, kBtl };
  Generator generator = Generator::kBtl;
  std::vector<double> utilities;               // BTL only, all > 0
  std::optional<PreferenceMatrix> matrix;      // explicit only
  double tie_probability = 0.0;
  std::size_t examples = 1;                    // contexts drawn uniformly

  static SyntheticSpec btl(std::vector<double> utilities, double tie_probability);
  static SyntheticSpec explicit_matrix(PreferenceMatrix m, double tie_probability);
};

// u_s = ratio^s for s = 0..k-1; system k-1 is the Condorcet winner.
std::vector<double> geometric_utilities(int k, double ratio);

class SyntheticEnvironment final : public Environment {
 public:
  explicit SyntheticEnvironment(const SyntheticSpec& spec);
  int k() const override { return base_.k(); }
  // 1, 0.5, 0 with probabilities ((1-t) p, t, (1-t)(1-p)).
  Draw draw(Pair pair, Rng& rng) const override;
  PreferenceMatrix preference_matrix() const override { return base_.with_ties(tie_); }
  const PreferenceMatrix& base_matrix() const { return base_; }

 private:
  PreferenceMatrix base_;
  double tie_;
  std::size_t examples_;
};

// ---- annotators ------------------------------------------------------------

// Owns an rng stream over a shared environment; increments a (possibly
// shared) counter once per consumed human judgment.
class AnnotatorHandle {
 public:
  AnnotatorHandle(std::shared_ptr<const Environment> env, std::uint64_t seed,
                  std::shared_ptr<std::atomic<long long>> counter = nullptr);

  Draw draw(Pair pair) { return env_->draw(pair, rng_); }
  ComparisonOutcome consume(Pair pair, const Draw& d);
  ComparisonOutcome query(Pair pair) { return consume(pair, draw(pair)); }

  long long human_count() const { return counter_->load(); }
  const Environment& environment() const { return *env_; }
  const std::shared_ptr<const Environment>& shared_environment() const { return env_; }

 private:
  std::shared_ptr<const Environment> env_;
  Rng rng_;
  std::shared_ptr<std::atomic<long long>> counter_;
};

AnnotatorHandle synth_annotator(const SyntheticSpec& spec, std::uint64_t seed);

// FIFO that releases an outcome after d further selections; d = 0 releases
// immediately.
class DelayQueue {
 public:
  explicit DelayQueue(int delay);
  int delay() const { return delay_; }
  // Enqueues the outcome of the latest selection and returns the outcome now
  // due, if any.
  std::optional<ComparisonOutcome> push(ComparisonOutcome outcome);
  std::vector<ComparisonOutcome> flush();
  std::size_t pending() const { return queue_.size(); }

 private:
  int delay_;
  std::deque<ComparisonOutcome> queue_;
};

// An annotator whose answers reach the learner d selections late.
class DelayedAnnotator {
 public:
  DelayedAnnotator(AnnotatorHandle handle, int delay) : handle_(std::move(handle)), queue_(delay) {}
  // Queries the pair now; returns what the learner may see now.
  std::optional<ComparisonOutcome> step(Pair pair) { return queue_.push(handle_.query(pair)); }
  AnnotatorHandle& handle() { return handle_; }
  DelayQueue& queue() { return queue_; }

 private:
  AnnotatorHandle handle_;
  DelayQueue queue_;
};

DelayedAnnotator delayed(AnnotatorHandle handle, int delay);

// n logical annotators over one environment with independent rng streams and
// one atomic counter.
class AnnotatorPool {
 public:
  AnnotatorPool(std::shared_ptr<const Environment> env, int annotators, std::uint64_t seed);
  int size() const { return static_cast<int>(handles_.size()); }
  AnnotatorHandle& annotator(int i) { return handles_.at(static_cast<std::size_t>(i)); }
  long long human_count() const { return counter_->load(); }

 private:
  std::shared_ptr<std::atomic<long long>> counter_;
  std::vector<AnnotatorHandle> handles_;
};

// ---- latent-quality corpus -------------------------------------------------

// q(s, e) = s ln(ratio) + Gumbel noise. The human judgment for a pair on an
// example is a win when the quality gap exceeds the tie margin, a loss below
// minus the margin, a tie otherwise.
struct LatentCorpusSpec {
  int k = 10;
  std::size_t examples = 2000;
  double ratio = 1.3;
  double tie_margin = 0.4054651081081644;  // ln 1.5
  std::uint64_t seed = 0;
};

class LatentCorpus final : public Environment {
 public:
  explicit LatentCorpus(const LatentCorpusSpec& spec);
  int k() const override { return spec_.k; }
  std::size_t num_examples() const { return spec_.examples; }
  double quality(SystemId s, std::size_t e) const {
    return q_[static_cast<std::size_t>(s) * spec_.examples + e];
  }
  double judgment(Pair pair, std::size_t e) const;
  Draw draw(Pair pair, Rng& rng) const override;
  PreferenceMatrix preference_matrix() const override;
  const LatentCorpusSpec& spec() const { return spec_; }

 private:
  LatentCorpusSpec spec_;
  std::vector<double> q_;
};

struct SyntheticMetricSpec {
  double noise = 0.5;         // sd of the score error
  double sample_noise = 0.5;  // sd of each Monte-Carlo sample around the score
  std::size_t samples = 20;   // 0 for point scores only
  std::uint64_t seed = 0;
};

// Scores q + N(0, noise), samples score + N(0, sample_noise). Systems are
// named s00, s01, ... so the table roster matches corpus ids.
MetricScoreTable simulate_metric(const LatentCorpus& corpus, const SyntheticMetricSpec& spec);

// Scores independent of quality: N(0, 1) plus samples with unit spread.
MetricScoreTable noise_metric(int k, std::size_t examples, std::size_t samples,
                              std::uint64_t seed);

// Every (pair, example) of the corpus as (score_a, score_b, human label).
std::vector<ScoredPair> scored_pairs(const LatentCorpus& corpus, const MetricScoreTable& table);

std::string system_name(SystemId s);

}  // namespace activeeval
