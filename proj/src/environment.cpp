#include "activeeval/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>

#include "activeeval/errors.hpp"
#include "activeeval/jsonl.hpp"

namespace activeeval {

std::string Environment::example_id(std::size_t example) const {
  return "e" + std::to_string(example);
}

std::optional<SystemId> Environment::condorcet_winner() const {
  return activeeval::condorcet_winner(preference_matrix());
}

// ---- JudgmentDataset -------------------------------------------------------

JudgmentDataset JudgmentDataset::from_records(const std::vector<JudgmentRecord>& records) {
  JudgmentDataset ds;
  std::vector<std::string> names, examples;
  for (const auto& r : records) {
    if (r.system_a == r.system_b) throw ValidationError("record compares a system with itself");
    if (!is_valid_outcome_value(r.outcome)) throw ValidationError("outcome must be 0, 0.5 or 1");
    names.push_back(r.system_a);
    names.push_back(r.system_b);
    examples.push_back(r.example);
  }
  ds.roster_ = Roster(std::move(names));
  if (ds.roster_.size() < 2) throw ValidationError("dataset needs at least 2 systems");
  std::sort(examples.begin(), examples.end());
  examples.erase(std::unique(examples.begin(), examples.end()), examples.end());
  ds.examples_ = std::move(examples);
  std::map<std::string, std::uint32_t> ex_index;
  for (std::size_t i = 0; i < ds.examples_.size(); ++i) {
    ex_index[ds.examples_[i]] = static_cast<std::uint32_t>(i);
  }
  ds.by_pair_.assign(num_pairs(ds.k()), {});
  for (const auto& r : records) {
    SystemId a = ds.roster_.id(r.system_a);
    SystemId b = ds.roster_.id(r.system_b);
    double v = r.outcome;
    if (a > b) {
      std::swap(a, b);
      v = 1.0 - v;
    }
    ds.by_pair_[pair_index(ds.k(), a, b)].push_back({ex_index.at(r.example), v});
  }
  ds.total_ = records.size();
  return ds;
}

JudgmentDataset JudgmentDataset::read_jsonl(std::istream& in) {
  std::vector<JudgmentRecord> records;
  jsonl::for_each(in, [&](const jsonl::Json& rec, std::size_t line) {
    jsonl::check_keys(rec, {"example_id", "system_a", "system_b", "outcome"}, {}, line);
    JudgmentRecord r{jsonl::get_id(rec, "example_id", line), jsonl::get_id(rec, "system_a", line),
                     jsonl::get_id(rec, "system_b", line), jsonl::get_number(rec, "outcome", line)};
    if (r.system_a == r.system_b) throw ValidationError("system_a equals system_b", line);
    if (!is_valid_outcome_value(r.outcome)) throw ValidationError("outcome must be 0, 0.5 or 1", line);
    records.push_back(std::move(r));
  });
  return from_records(records);
}

std::size_t JudgmentDataset::count(SystemId a, SystemId b) const {
  return by_pair_[pair_index(k(), a, b)].size();
}

Draw JudgmentDataset::draw(Pair pair, Rng& rng) const {
  const auto& recs = by_pair_[pair_index(k(), pair.first, pair.second)];
  if (recs.empty()) {
    throw CoverageError("no judgments for pair (" + roster_.name(pair.first) + ", " +
                        roster_.name(pair.second) + ")");
  }
  const Stored& s = recs[uniform_index(rng, recs.size())];
  return {s.example, pair.first < pair.second ? s.value : 1.0 - s.value};
}

std::vector<Pair> JudgmentDataset::uncovered_pairs() const {
  std::vector<Pair> out;
  for (std::size_t p = 0; p < by_pair_.size(); ++p) {
    if (by_pair_[p].empty()) out.push_back(pair_at(k(), p));
  }
  return out;
}

void JudgmentDataset::check_coverage() const {
  const auto missing = uncovered_pairs();
  if (missing.empty()) return;
  std::string msg = "uncovered pairs:";
  for (const auto& p : missing) {
    msg += " (" + roster_.name(p.first) + ", " + roster_.name(p.second) + ")";
  }
  throw CoverageError(msg);
}

PreferenceMatrix JudgmentDataset::preference_matrix() const {
  PreferenceMatrix m(k());
  for (std::size_t p = 0; p < by_pair_.size(); ++p) {
    if (by_pair_[p].empty()) continue;
    double s = 0.0;
    for (const auto& r : by_pair_[p]) s += r.value;
    const Pair q = pair_at(k(), p);
    m.set(q.first, q.second, s / static_cast<double>(by_pair_[p].size()));
  }
  return m;
}

ComparisonOutcome sample_judgment(const JudgmentDataset& ds, Pair pair, Rng& rng) {
  const Draw d = ds.draw(pair, rng);
  return {pair, d.value, Source::kHuman, ds.example_id(d.example)};
}

namespace {

std::vector<JudgmentRecord> compare_all(const std::string& example,
                                        const std::vector<std::string>& systems,
                                        const std::vector<double>& keys, bool higher_better) {
  if (systems.size() != keys.size()) throw ValidationError("systems and values differ in length");
  std::vector<JudgmentRecord> out;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    for (std::size_t j = i + 1; j < systems.size(); ++j) {
      double v = 0.5;
      if (keys[i] != keys[j]) v = ((keys[i] > keys[j]) == higher_better) ? 1.0 : 0.0;
      out.push_back({example, systems[i], systems[j], v});
    }
  }
  return out;
}

}  // namespace

std::vector<JudgmentRecord> ranks_to_judgments(const std::string& example,
                                               const std::vector<std::string>& systems,
                                               const std::vector<double>& ranks) {
  return compare_all(example, systems, ranks, false);
}

std::vector<JudgmentRecord> scores_to_judgments(const std::string& example,
                                                const std::vector<std::string>& systems,
                                                const std::vector<double>& scores) {
  return compare_all(example, systems, scores, true);
}

// ---- synthetic -------------------------------------------------------------

SyntheticSpec SyntheticSpec::btl(std::vector<double> utilities, double tie_probability) {
  SyntheticSpec s;
  s.generator = Generator::kBtl;
  s.utilities = std::move(utilities);
  s.tie_probability = tie_probability;
  return s;
}

SyntheticSpec SyntheticSpec::explicit_matrix(PreferenceMatrix m, double tie_probability) {
  SyntheticSpec s;
  s.generator = Generator::kMatrix;
  s.matrix = std::move(m);
  s.tie_probability = tie_probability;
  return s;
}

std::vector<double> geometric_utilities(int k, double ratio) {
  std::vector<double> u(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) u[static_cast<std::size_t>(s)] = std::pow(ratio, s);
  return u;
}

namespace {

PreferenceMatrix base_of(const SyntheticSpec& spec) {
  if (!(spec.tie_probability >= 0.0 && spec.tie_probability <= 1.0)) {
    throw ConfigError("tie probability must lie in [0, 1]");
  }
  if (spec.examples == 0) throw ConfigError("examples must be positive");
  if (spec.generator == SyntheticSpec::Generator::kBtl) {
    return PreferenceMatrix::from_btl(spec.utilities);
  }
  if (!spec.matrix) throw ConfigError("explicit generator needs a matrix");
  return *spec.matrix;
}

}  // namespace

SyntheticEnvironment::SyntheticEnvironment(const SyntheticSpec& spec)
    : base_(base_of(spec)), tie_(spec.tie_probability), examples_(spec.examples) {}

Draw SyntheticEnvironment::draw(Pair pair, Rng& rng) const {
  const std::size_t example = examples_ > 1 ? uniform_index(rng, examples_) : 0;
  const double p = base_(pair.first, pair.second);
  const double u = uniform01(rng);
  const double win = (1.0 - tie_) * p;
  double v;
  if (u < win) {
    v = 1.0;
  } else if (u < win + tie_) {
    v = 0.5;
  } else {
    v = 0.0;
  }
  return {example, v};
}

// ---- annotators ------------------------------------------------------------

AnnotatorHandle::AnnotatorHandle(std::shared_ptr<const Environment> env, std::uint64_t seed,
                                 std::shared_ptr<std::atomic<long long>> counter)
    : env_(std::move(env)),
      rng_(seed),
      counter_(counter ? std::move(counter) : std::make_shared<std::atomic<long long>>(0)) {
  if (!env_) throw ConfigError("annotator needs an environment");
}

ComparisonOutcome AnnotatorHandle::consume(Pair pair, const Draw& d) {
  counter_->fetch_add(1);
  return {pair, d.value, Source::kHuman, env_->example_id(d.example)};
}

AnnotatorHandle synth_annotator(const SyntheticSpec& spec, std::uint64_t seed) {
  return AnnotatorHandle(std::make_shared<SyntheticEnvironment>(spec), seed);
}

DelayQueue::DelayQueue(int delay) : delay_(delay) {
  if (delay < 0) throw ConfigError("delay must be non-negative");
}

std::optional<ComparisonOutcome> DelayQueue::push(ComparisonOutcome outcome) {
  queue_.push_back(std::move(outcome));
  if (static_cast<int>(queue_.size()) <= delay_) return std::nullopt;
  ComparisonOutcome due = std::move(queue_.front());
  queue_.pop_front();
  return due;
}

std::vector<ComparisonOutcome> DelayQueue::flush() {
  std::vector<ComparisonOutcome> out(std::make_move_iterator(queue_.begin()),
                                     std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

DelayedAnnotator delayed(AnnotatorHandle handle, int delay) {
  return DelayedAnnotator(std::move(handle), delay);
}

AnnotatorPool::AnnotatorPool(std::shared_ptr<const Environment> env, int annotators,
                             std::uint64_t seed)
    : counter_(std::make_shared<std::atomic<long long>>(0)) {
  if (annotators < 1) throw ConfigError("pool needs at least one annotator");
  for (int i = 0; i < annotators; ++i) {
    handles_.emplace_back(env, derive_seed(seed, static_cast<std::uint64_t>(i)), counter_);
  }
}

// ---- latent corpus ---------------------------------------------------------

std::string system_name(SystemId s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", s);
  return buf;
}

LatentCorpus::LatentCorpus(const LatentCorpusSpec& spec) : spec_(spec) {
  if (spec.k < 2 || spec.examples == 0 || !(spec.ratio > 0) || spec.tie_margin < 0) {
    throw ConfigError("invalid latent corpus spec");
  }
  Rng rng(spec.seed);
  const double step = std::log(spec.ratio);
  q_.resize(static_cast<std::size_t>(spec.k) * spec.examples);
  for (int s = 0; s < spec.k; ++s) {
    for (std::size_t e = 0; e < spec.examples; ++e) {
      double u = uniform01(rng);
      if (u <= 0.0) u = 1e-300;
      q_[static_cast<std::size_t>(s) * spec.examples + e] = s * step - std::log(-std::log(u));
    }
  }
}

double LatentCorpus::judgment(Pair pair, std::size_t e) const {
  const double d = quality(pair.first, e) - quality(pair.second, e);
  if (d > spec_.tie_margin) return 1.0;
  if (d < -spec_.tie_margin) return 0.0;
  return 0.5;
}

Draw LatentCorpus::draw(Pair pair, Rng& rng) const {
  const std::size_t e = uniform_index(rng, spec_.examples);
  return {e, judgment(pair, e)};
}

PreferenceMatrix LatentCorpus::preference_matrix() const {
  PreferenceMatrix m(spec_.k);
  for (SystemId i = 0; i < spec_.k; ++i) {
    for (SystemId j = i + 1; j < spec_.k; ++j) {
      double s = 0.0;
      for (std::size_t e = 0; e < spec_.examples; ++e) s += judgment({i, j}, e);
      m.set(i, j, s / static_cast<double>(spec_.examples));
    }
  }
  return m;
}

MetricScoreTable simulate_metric(const LatentCorpus& corpus, const SyntheticMetricSpec& spec) {
  Rng rng(spec.seed);
  std::vector<ScoreRecord> records;
  records.reserve(static_cast<std::size_t>(corpus.k()) * corpus.num_examples());
  for (SystemId s = 0; s < corpus.k(); ++s) {
    for (std::size_t e = 0; e < corpus.num_examples(); ++e) {
      ScoreRecord r{system_name(s), corpus.example_id(e),
                    corpus.quality(s, e) + sample_normal(rng, 0.0, spec.noise), {}};
      for (std::size_t l = 0; l < spec.samples; ++l) {
        r.samples.push_back(r.score + sample_normal(rng, 0.0, spec.sample_noise));
      }
      records.push_back(std::move(r));
    }
  }
  return MetricScoreTable::from_records(std::move(records));
}

MetricScoreTable noise_metric(int k, std::size_t examples, std::size_t samples,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoreRecord> records;
  for (SystemId s = 0; s < k; ++s) {
    for (std::size_t e = 0; e < examples; ++e) {
      ScoreRecord r{system_name(s), "e" + std::to_string(e), sample_normal(rng, 0.0, 1.0), {}};
      for (std::size_t l = 0; l < samples; ++l) {
        r.samples.push_back(r.score + sample_normal(rng, 0.0, 1.0));
      }
      records.push_back(std::move(r));
    }
  }
  return MetricScoreTable::from_records(std::move(records));
}

std::vector<ScoredPair> scored_pairs(const LatentCorpus& corpus, const MetricScoreTable& table) {
  std::vector<std::size_t> column(corpus.num_examples());
  for (std::size_t e = 0; e < corpus.num_examples(); ++e) {
    column[e] = table.example_index(corpus.example_id(e));
  }
  std::vector<ScoredPair> out;
  for (SystemId i = 0; i < corpus.k(); ++i) {
    for (SystemId j = i + 1; j < corpus.k(); ++j) {
      for (std::size_t e = 0; e < corpus.num_examples(); ++e) {
        out.push_back({table.at(i, column[e]).score, table.at(j, column[e]).score,
                       corpus.judgment({i, j}, e)});
      }
    }
  }
  return out;
}

}  // namespace activeeval
