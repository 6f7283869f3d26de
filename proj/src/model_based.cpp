#include "activeeval/model_based.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "activeeval/errors.hpp"

namespace activeeval {

double binary_entropy(double p, EntropyBase base) {
  double h = 0.0;
  if (p > 0.0 && p < 1.0) h = -p * std::log(p) - (1.0 - p) * std::log1p(-p);
  return base == EntropyBase::kBit ? h / std::log(2.0) : h;
}

double bald_score(const std::vector<double>& samples, EntropyBase base) {
  if (samples.empty()) throw DegenerateInputError("BALD needs at least one sample");
  double mean = 0.0, mean_h = 0.0;
  for (double p : samples) {
    mean += p;
    mean_h += binary_entropy(p, base);
  }
  const double n = static_cast<double>(samples.size());
  return std::max(0.0, binary_entropy(mean / n, base) - mean_h / n);
}

double std_score(const std::vector<double>& samples) {
  if (samples.empty()) throw DegenerateInputError("standard deviation needs samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double p : samples) ss += (p - mean) * (p - mean);
  return std::sqrt(ss / n);
}

double uncertainty(const UncertaintyConfig& cfg, const PairwisePrediction& prediction) {
  if (prediction.samples.size() < 2) {
    throw ConfigError("uncertainty gating needs a prediction with samples");
  }
  return cfg.measure == UncertaintyMeasure::kBald ? bald_score(prediction.samples)
                                                  : std_score(prediction.samples);
}

namespace {

ComparisonOutcome model_outcome(const PairwisePrediction& p) {
  return {p.pair, p.outcome, Source::kModel, ""};
}

}  // namespace

ComparisonOutcome random_mixing_feedback(const RandomMixingConfig& cfg,
                                         const PairwisePrediction& prediction,
                                         const HumanQuery& human, Rng& rng) {
  if (!(cfg.p_m >= 0.0 && cfg.p_m <= 1.0)) throw ConfigError("p_m must lie in [0, 1]");
  if (bernoulli(rng, cfg.p_m)) return model_outcome(prediction);
  return human();
}

ComparisonOutcome uncertainty_gated_feedback(const UncertaintyConfig& cfg,
                                             const PairwisePrediction& prediction,
                                             const HumanQuery& human) {
  if (cfg.threshold < 0) throw ConfigError("threshold must be non-negative");
  if (uncertainty(cfg, prediction) > cfg.threshold) return human();
  return model_outcome(prediction);
}

double threshold_for_human_fraction(std::vector<double> scores, double human_fraction) {
  if (scores.empty()) throw DegenerateInputError("no scores to take a quantile of");
  if (!(human_fraction >= 0.0 && human_fraction <= 1.0)) {
    throw ConfigError("human fraction must lie in [0, 1]");
  }
  std::sort(scores.begin(), scores.end());
  const double below = (1.0 - human_fraction) * static_cast<double>(scores.size());
  const auto rank = static_cast<std::size_t>(std::ceil(below - 1e-9));
  if (rank == 0) return 0.0;
  return std::max(0.0, scores[std::min(rank, scores.size()) - 1]);
}

double mixing_rate_for_accuracy(double accuracy) {
  if (accuracy >= 0.70) return 0.8;
  if (accuracy >= 0.65) return 0.5 + (accuracy - 0.65) / 0.05 * 0.2;
  return 0.0;
}

// ---- UCB elimination -------------------------------------------------------

namespace {

struct PairResult {
  double p_hat = 0.5;
  double sigma = 0.0;
  std::size_t n = 0;
};

PairResult estimate_pair(const MetricScoreTable& table, const PairwiseModel& model, SystemId i,
                         SystemId j, const std::vector<std::size_t>& examples) {
  if (examples.empty()) throw DegenerateInputError("empty example set for a pair");
  double mean_sum = 0.0, var_sum = 0.0;
  std::vector<double> probs;
  for (std::size_t e : examples) {
    const auto& a = table.at(i, e);
    const auto& b = table.at(j, e);
    const std::size_t L = std::min(a.samples.size(), b.samples.size());
    if (L < 2) throw ConfigError("elimination needs score samples");
    probs.resize(L);
    double m = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      probs[l] = model.probability(a.samples[l], b.samples[l]);
      m += probs[l];
    }
    m /= static_cast<double>(L);
    double v = 0.0;
    for (double p : probs) v += (p - m) * (p - m);
    mean_sum += m;
    var_sum += v / static_cast<double>(L);
  }
  const double n = static_cast<double>(examples.size());
  return {mean_sum / n, std::sqrt(var_sum) / n, examples.size()};
}

std::vector<std::size_t> shared_examples(const MetricScoreTable& table, SystemId i, SystemId j) {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < table.num_examples(); ++e) {
    if (table.contains(i, e) && table.contains(j, e)) out.push_back(e);
  }
  return out;
}

EliminationReport assemble(int k, const std::vector<PairResult>& results,
                           const UcbEliminationConfig& cfg) {
  EliminationReport r;
  r.k = k;
  const auto kk = static_cast<std::size_t>(k);
  r.p_hat.assign(kk * kk, 0.5);
  r.sigma.assign(kk * kk, 0.0);
  r.upper.assign(kk * kk, 0.5);
  r.n.assign(kk * kk, 0);
  for (std::size_t p = 0; p < results.size(); ++p) {
    const Pair q = pair_at(k, p);
    const auto ij = static_cast<std::size_t>(q.first) * kk + static_cast<std::size_t>(q.second);
    const auto ji = static_cast<std::size_t>(q.second) * kk + static_cast<std::size_t>(q.first);
    r.p_hat[ij] = results[p].p_hat;
    r.p_hat[ji] = 1.0 - results[p].p_hat;
    r.sigma[ij] = r.sigma[ji] = results[p].sigma;
    r.upper[ij] = r.p_hat[ij] + cfg.alpha * results[p].sigma;
    r.upper[ji] = r.p_hat[ji] + cfg.alpha * results[p].sigma;
    r.n[ij] = r.n[ji] = results[p].n;
  }
  std::vector<int> wins(kk, 0);
  for (std::size_t i = 0; i < kk; ++i) {
    for (std::size_t j = 0; j < kk; ++j) {
      if (i != j && r.upper[i * kk + j] > 0.5) ++wins[i];
    }
  }
  r.optimistic_copeland.resize(kk);
  r.survived.assign(kk, false);
  const double need = cfg.copeland_threshold * (k - 1) - 1e-9;
  bool any = false;
  for (std::size_t i = 0; i < kk; ++i) {
    r.optimistic_copeland[i] = wins[i] / static_cast<double>(k - 1);
    r.survived[i] = wins[i] >= need;
    any = any || r.survived[i];
  }
  if (!any) {
    const int best = *std::max_element(wins.begin(), wins.end());
    for (std::size_t i = 0; i < kk; ++i) r.survived[i] = wins[i] == best;
  }
  return r;
}

void check_config(const MetricScoreTable& table, const UcbEliminationConfig& cfg,
                  const ExampleSets* examples) {
  if (cfg.alpha < 0) throw ConfigError("alpha must be non-negative");
  if (!(cfg.copeland_threshold > 0 && cfg.copeland_threshold <= 1)) {
    throw ConfigError("copeland threshold must lie in (0, 1]");
  }
  if (table.num_systems() < 2) throw ConfigError("elimination needs at least 2 systems");
  if (!table.has_samples()) throw ConfigError("elimination needs score samples");
  if (examples && examples->size() != num_pairs(table.num_systems())) {
    throw ConfigError("example sets must cover every pair");
  }
}

}  // namespace

EliminationReport ucb_eliminate_serial(const MetricScoreTable& table, const PairwiseModel& model,
                                       const UcbEliminationConfig& cfg,
                                       const ExampleSets* examples) {
  check_config(table, cfg, examples);
  const int k = table.num_systems();
  std::vector<PairResult> results(num_pairs(k));
  for (std::size_t p = 0; p < results.size(); ++p) {
    const Pair q = pair_at(k, p);
    results[p] = estimate_pair(table, model, q.first, q.second,
                               examples ? (*examples)[p] : shared_examples(table, q.first, q.second));
  }
  return assemble(k, results, cfg);
}

EliminationReport ucb_eliminate(const MetricScoreTable& table, const PairwiseModel& model,
                                const UcbEliminationConfig& cfg, const ExampleSets* examples) {
  check_config(table, cfg, examples);
  const int k = table.num_systems();
  const auto pairs = static_cast<long>(num_pairs(k));
  std::vector<PairResult> results(static_cast<std::size_t>(pairs));
  std::vector<std::string> errors(static_cast<std::size_t>(pairs));
#pragma omp parallel for schedule(dynamic)
  for (long p = 0; p < pairs; ++p) {
    const auto pu = static_cast<std::size_t>(p);
    const Pair q = pair_at(k, pu);
    try {
      results[pu] = estimate_pair(table, model, q.first, q.second,
                                  examples ? (*examples)[pu]
                                           : shared_examples(table, q.first, q.second));
    } catch (const std::exception& e) {
      errors[pu] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DegenerateInputError(e);
  }
  return assemble(k, results, cfg);
}

std::vector<SystemId> EliminationReport::survivors() const {
  std::vector<SystemId> out;
  for (int i = 0; i < k; ++i) {
    if (survived[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

void EliminationReport::write_csv(std::ostream& out, const Roster& roster) const {
  out << "system,opponent,p_hat,sigma,upper,examples,optimistic_copeland,survived\n";
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t i = 0; i < kk; ++i) {
    for (std::size_t j = 0; j < kk; ++j) {
      if (i == j) continue;
      const std::size_t ij = i * kk + j;
      out << roster.name(static_cast<SystemId>(i)) << ',' << roster.name(static_cast<SystemId>(j))
          << ',' << p_hat[ij] << ',' << sigma[ij] << ',' << upper[ij] << ',' << n[ij] << ','
          << optimistic_copeland[i] << ',' << (survived[i] ? 1 : 0) << '\n';
    }
  }
}

nlohmann::json EliminationReport::to_json(const Roster& roster) const {
  nlohmann::json systems = nlohmann::json::array();
  for (int i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    systems.push_back({{"system", roster.name(i)},
                       {"optimistic_copeland", optimistic_copeland[iu]},
                       {"survived", static_cast<bool>(survived[iu])}});
  }
  return {{"systems", systems}};
}

// ---- composition -----------------------------------------------------------

std::string_view feedback_policy_name(FeedbackPolicy p) {
  switch (p) {
    case FeedbackPolicy::kHumanOnly: return "human_only";
    case FeedbackPolicy::kRandomMixing: return "random_mixing";
    case FeedbackPolicy::kUncertaintyGated: return "uncertainty_gated";
  }
  return "human_only";
}

FeedbackPolicy parse_feedback_policy(std::string_view name) {
  if (name == "human_only") return FeedbackPolicy::kHumanOnly;
  if (name == "random_mixing") return FeedbackPolicy::kRandomMixing;
  if (name == "uncertainty_gated") return FeedbackPolicy::kUncertaintyGated;
  throw ConfigError("unknown feedback policy '" + std::string(name) + "'");
}

ComposedLearner::ComposedLearner(const AlgorithmSpec& base, int k, std::uint64_t seed,
                                 std::vector<SystemId> survivors, ComposeConfig cfg)
    : k_(k), cfg_(cfg) {
  if (survivors.empty()) {
    for (SystemId i = 0; i < k; ++i) survivors.push_back(i);
  }
  std::sort(survivors.begin(), survivors.end());
  survivors.erase(std::unique(survivors.begin(), survivors.end()), survivors.end());
  for (SystemId s : survivors) check_system(k, s);
  survivors_ = std::move(survivors);
  local_.assign(static_cast<std::size_t>(k), -1);
  for (std::size_t i = 0; i < survivors_.size(); ++i) {
    local_[static_cast<std::size_t>(survivors_[i])] = static_cast<int>(i);
  }
  if (survivors_.size() >= 2) {
    inner_ = create_learner(base, static_cast<int>(survivors_.size()), seed);
    inner_->set_journaling(false);
  }
}

Pair ComposedLearner::select_pair() {
  if (!inner_) throw TerminatedError(survivors_.front());
  const Pair p = inner_->select_pair();
  return {survivors_[static_cast<std::size_t>(p.first)],
          survivors_[static_cast<std::size_t>(p.second)]};
}

void ComposedLearner::update(const ComparisonOutcome& o) {
  check_system(k_, o.pair.first);
  check_system(k_, o.pair.second);
  if (!inner_) return;
  const int a = local_[static_cast<std::size_t>(o.pair.first)];
  const int b = local_[static_cast<std::size_t>(o.pair.second)];
  if (a < 0 || b < 0) return;
  ComparisonOutcome local = o;
  local.pair = {a, b};
  inner_->update(local);
}

SystemId ComposedLearner::recommend() const {
  if (!inner_) return survivors_.front();
  return survivors_[static_cast<std::size_t>(inner_->recommend())];
}

ComparisonOutcome ComposedLearner::feedback(const PairwisePrediction* prediction,
                                            const HumanQuery& human, Rng& rng) const {
  switch (cfg_.policy) {
    case FeedbackPolicy::kHumanOnly:
      return human();
    case FeedbackPolicy::kRandomMixing:
      if (!prediction) throw ConfigError("random mixing needs a metric prediction");
      return random_mixing_feedback(cfg_.mixing, *prediction, human, rng);
    case FeedbackPolicy::kUncertaintyGated:
      if (!prediction) throw ConfigError("uncertainty gating needs a metric prediction");
      return uncertainty_gated_feedback(cfg_.gating, *prediction, human);
  }
  return human();
}

std::unique_ptr<ComposedLearner> compose(const AlgorithmSpec& base, int k, std::uint64_t seed,
                                         std::vector<SystemId> survivors, ComposeConfig cfg) {
  return std::make_unique<ComposedLearner>(base, k, seed, std::move(survivors), cfg);
}

}  // namespace activeeval
