#pragma once

// Automatic-metric side of model-based evaluation: built-in lexical scorers,
// per (system, example) score tables with optional Monte-Carlo samples, and
// pairwise predictions through a fitted probability model.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "activeeval/core.hpp"
#include "activeeval/probability_models.hpp"

namespace activeeval {

enum class LexicalKind { kCharNgramF, kTokenNgramPrecision };

std::string_view lexical_kind_name(LexicalKind k);
LexicalKind parse_lexical_kind(std::string_view name);

// Sufficient statistics of one hypothesis / reference pair. For chrF the
// per-order vectors cover n = 1..6 over characters with whitespace removed;
// for BLEU n = 1..4 over whitespace tokens.
struct LexicalStats {
  LexicalKind kind = LexicalKind::kCharNgramF;
  std::vector<double> matches;
  std::vector<double> hyp_totals;
  std::vector<double> ref_totals;
  double hyp_length = 0.0;
  double ref_length = 0.0;

  LexicalStats& operator+=(const LexicalStats& other);
};

// Throws DegenerateInputError on an empty (or all-whitespace) reference.
LexicalStats lexical_stats(std::string_view hypothesis, std::string_view reference,
                           LexicalKind kind);

// chrF: precision and recall averaged over orders the reference has, then
// F-beta with beta = 2. BLEU: geometric mean of modified precisions over the
// effective order (orders with hypothesis n-grams) times the brevity penalty
// exp(1 - r / c); zero if any used precision is zero.
double score_from_stats(const LexicalStats& stats);

double lexical_score(std::string_view hypothesis, std::string_view reference, LexicalKind kind);

// BLEU from summed statistics over sentence pairs.
double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references);

// Sorted, de-duplicated system names; SystemId is the position.
class Roster {
 public:
  Roster() = default;
  explicit Roster(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(SystemId id) const;
  // Throws LookupError for an unknown name.
  SystemId id(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, SystemId> index_;
};

struct ScoreRecord {
  std::string system;
  std::string example;
  double score = 0.0;
  std::vector<double> samples;
};

// Dense (system x example) table; systems and examples are kept in sorted
// order. Immutable once built.
class MetricScoreTable {
 public:
  struct Entry {
    double score = 0.0;
    std::vector<double> samples;
    bool present = false;
  };

  MetricScoreTable() = default;

  // Rejects duplicates, samples with L < 2, and inconsistent L.
  static MetricScoreTable from_records(std::vector<ScoreRecord> records);

  // Schema: {system_id, example_id, score, samples?}; errors carry line numbers.
  static MetricScoreTable read_jsonl(std::istream& in);
  void write_jsonl(std::ostream& out) const;

  const Roster& roster() const { return roster_; }
  const std::vector<std::string>& examples() const { return examples_; }
  std::size_t example_index(const std::string& example) const;
  int num_systems() const { return roster_.size(); }
  std::size_t num_examples() const { return examples_.size(); }
  std::size_t sample_count() const { return sample_count_; }
  bool has_samples() const { return sample_count_ > 0; }

  // Throws LookupError naming the missing key.
  const Entry& at(SystemId system, std::size_t example) const;
  const Entry& at(const std::string& system, const std::string& example) const;
  bool contains(SystemId system, std::size_t example) const;

 private:
  Roster roster_;
  std::vector<std::string> examples_;
  std::unordered_map<std::string, std::size_t> example_index_;
  std::vector<Entry> entries_;
  std::size_t sample_count_ = 0;
};

struct PairwisePrediction {
  Pair pair;
  std::size_t example = 0;
  double mean = 0.5;             // p-bar
  std::vector<double> samples;   // p_l, empty without score samples
  double outcome = 0.5;          // predicted w-hat
};

PairwisePrediction predict_pair(const MetricScoreTable& table, const PairwiseModel& model,
                                SystemId a, SystemId b, std::size_t example);
PairwisePrediction predict_pair(const MetricScoreTable& table, const PairwiseModel& model,
                                const std::string& a, const std::string& b,
                                const std::string& example);

struct StatsRecord {
  std::string system;
  std::string example;
  LexicalStats stats;
};

// Each replica redraws every n-gram match count as Binomial(hyp_total,
// matches / hyp_total) and rescores. Deterministic for a seed; L >= 2.
MetricScoreTable bootstrap_samples(const std::vector<StatsRecord>& records, std::size_t L,
                                   std::uint64_t seed);

// Scores system outputs against references: outputs are {system_id,
// example_id, text}, references {example_id, text}.
struct TextRecord {
  std::string system;  // empty for references
  std::string example;
  std::string text;
};
std::vector<TextRecord> read_outputs(std::istream& in);
std::vector<TextRecord> read_references(std::istream& in);
std::vector<StatsRecord> score_outputs(const std::vector<TextRecord>& outputs,
                                       const std::vector<TextRecord>& references,
                                       LexicalKind kind);

}  // namespace activeeval
