#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <tuple>

#include "activeeval/errors.hpp"
#include "activeeval/jsonl.hpp"
#include "activeeval/metric_oracle.hpp"
#include "activeeval/rng.hpp"

namespace activeeval {

Roster::Roster(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  names_ = std::move(names);
  for (std::size_t i = 0; i < names_.size(); ++i) index_[names_[i]] = static_cast<SystemId>(i);
}

const std::string& Roster::name(SystemId id) const {
  if (id < 0 || id >= size()) throw IndexError("system id " + std::to_string(id) + " out of range");
  return names_[static_cast<std::size_t>(id)];
}

SystemId Roster::id(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown system '" + name + "'");
  return it->second;
}

// ---- MetricScoreTable ------------------------------------------------------

MetricScoreTable MetricScoreTable::from_records(std::vector<ScoreRecord> records) {
  MetricScoreTable t;
  std::vector<std::string> systems, examples;
  for (const auto& r : records) {
    systems.push_back(r.system);
    examples.push_back(r.example);
  }
  t.roster_ = Roster(std::move(systems));
  std::sort(examples.begin(), examples.end());
  examples.erase(std::unique(examples.begin(), examples.end()), examples.end());
  t.examples_ = std::move(examples);
  for (std::size_t i = 0; i < t.examples_.size(); ++i) t.example_index_[t.examples_[i]] = i;
  t.entries_.assign(static_cast<std::size_t>(t.roster_.size()) * t.examples_.size(), {});
  bool first = true;
  for (auto& r : records) {
    if (!r.samples.empty() && r.samples.size() < 2) {
      throw ValidationError("samples must hold at least 2 values");
    }
    if (first) {
      t.sample_count_ = r.samples.size();
      first = false;
    } else if (r.samples.size() != t.sample_count_) {
      throw ValidationError("sample count differs across entries");
    }
    auto& e = t.entries_[static_cast<std::size_t>(t.roster_.id(r.system)) * t.examples_.size() +
                         t.example_index_.at(r.example)];
    if (e.present) {
      throw ValidationError("duplicate entry (" + r.system + ", " + r.example + ")");
    }
    e = {r.score, std::move(r.samples), true};
  }
  return t;
}

MetricScoreTable MetricScoreTable::read_jsonl(std::istream& in) {
  std::vector<ScoreRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t sample_count = 0;
  bool first = true;
  jsonl::for_each(in, [&](const jsonl::Json& rec, std::size_t line) {
    jsonl::check_keys(rec, {"system_id", "example_id", "score"}, {"samples"}, line);
    ScoreRecord r;
    r.system = jsonl::get_id(rec, "system_id", line);
    r.example = jsonl::get_id(rec, "example_id", line);
    r.score = jsonl::get_number(rec, "score", line);
    if (rec.contains("samples")) {
      const auto& s = rec.at("samples");
      if (!s.is_array()) throw ValidationError("samples must be an array", line);
      for (const auto& v : s) {
        if (!v.is_number()) throw ValidationError("samples must be numbers", line);
        r.samples.push_back(v.get<double>());
      }
      if (r.samples.size() < 2) throw ValidationError("samples must hold at least 2 values", line);
    }
    if (first) {
      sample_count = r.samples.size();
      first = false;
    } else if (r.samples.size() != sample_count) {
      throw ValidationError("sample count " + std::to_string(r.samples.size()) +
                                " differs from " + std::to_string(sample_count),
                            line);
    }
    if (!seen.insert({r.system, r.example}).second) {
      throw ValidationError("duplicate entry (" + r.system + ", " + r.example + ")", line);
    }
    records.push_back(std::move(r));
  });
  return from_records(std::move(records));
}

void MetricScoreTable::write_jsonl(std::ostream& out) const {
  for (SystemId s = 0; s < roster_.size(); ++s) {
    for (std::size_t e = 0; e < examples_.size(); ++e) {
      const auto& entry = entries_[static_cast<std::size_t>(s) * examples_.size() + e];
      if (!entry.present) continue;
      nlohmann::json j = {
          {"system_id", roster_.name(s)}, {"example_id", examples_[e]}, {"score", entry.score}};
      if (!entry.samples.empty()) j["samples"] = entry.samples;
      out << j.dump() << '\n';
    }
  }
}

std::size_t MetricScoreTable::example_index(const std::string& example) const {
  const auto it = example_index_.find(example);
  if (it == example_index_.end()) throw LookupError("unknown example '" + example + "'");
  return it->second;
}

bool MetricScoreTable::contains(SystemId system, std::size_t example) const {
  if (system < 0 || system >= roster_.size() || example >= examples_.size()) return false;
  return entries_[static_cast<std::size_t>(system) * examples_.size() + example].present;
}

const MetricScoreTable::Entry& MetricScoreTable::at(SystemId system, std::size_t example) const {
  if (!contains(system, example)) {
    const std::string sys = system >= 0 && system < roster_.size() ? roster_.name(system)
                                                                   : std::to_string(system);
    const std::string ex = example < examples_.size() ? examples_[example] : std::to_string(example);
    throw LookupError("no score for (" + sys + ", " + ex + ")");
  }
  return entries_[static_cast<std::size_t>(system) * examples_.size() + example];
}

const MetricScoreTable::Entry& MetricScoreTable::at(const std::string& system,
                                                    const std::string& example) const {
  if (!roster_.contains(system) || !example_index_.count(example)) {
    throw LookupError("no score for (" + system + ", " + example + ")");
  }
  return at(roster_.id(system), example_index_.at(example));
}

// ---- predictions -----------------------------------------------------------

PairwisePrediction predict_pair(const MetricScoreTable& table, const PairwiseModel& model,
                                SystemId a, SystemId b, std::size_t example) {
  const auto& ea = table.at(a, example);
  const auto& eb = table.at(b, example);
  PairwisePrediction out;
  out.pair = {a, b};
  out.example = example;
  if (!ea.samples.empty() && !eb.samples.empty()) {
    const std::size_t L = std::min(ea.samples.size(), eb.samples.size());
    out.samples.resize(L);
    double sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      out.samples[l] = model.probability(ea.samples[l], eb.samples[l]);
      sum += out.samples[l];
    }
    out.mean = sum / static_cast<double>(L);
  } else {
    out.mean = model.probability(ea.score, eb.score);
  }
  out.outcome = model.outcome(out.mean);
  return out;
}

PairwisePrediction predict_pair(const MetricScoreTable& table, const PairwiseModel& model,
                                const std::string& a, const std::string& b,
                                const std::string& example) {
  table.at(a, example);
  table.at(b, example);
  return predict_pair(table, model, table.roster().id(a), table.roster().id(b),
                      table.example_index(example));
}

// ---- bootstrap -------------------------------------------------------------

MetricScoreTable bootstrap_samples(const std::vector<StatsRecord>& records, std::size_t L,
                                   std::uint64_t seed) {
  if (L < 2) throw ConfigError("bootstrap needs L >= 2");
  std::vector<const StatsRecord*> order;
  for (const auto& r : records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const StatsRecord* x, const StatsRecord* y) {
    return std::tie(x->system, x->example) < std::tie(y->system, y->example);
  });
  Rng rng(seed);
  std::vector<ScoreRecord> out;
  out.reserve(order.size());
  for (const StatsRecord* r : order) {
    ScoreRecord s{r->system, r->example, score_from_stats(r->stats), {}};
    s.samples.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
      LexicalStats replica = r->stats;
      for (std::size_t n = 0; n < replica.matches.size(); ++n) {
        const double total = replica.hyp_totals[n];
        if (total <= 0) continue;
        std::binomial_distribution<long long> draw(static_cast<long long>(total),
                                                   replica.matches[n] / total);
        replica.matches[n] = std::min(static_cast<double>(draw(rng)), replica.ref_totals[n]);
      }
      s.samples.push_back(score_from_stats(replica));
    }
    out.push_back(std::move(s));
  }
  return MetricScoreTable::from_records(std::move(out));
}

// ---- text files ------------------------------------------------------------

std::vector<TextRecord> read_outputs(std::istream& in) {
  std::vector<TextRecord> out;
  jsonl::for_each(in, [&](const jsonl::Json& rec, std::size_t line) {
    jsonl::check_keys(rec, {"system_id", "example_id", "text"}, {}, line);
    out.push_back({jsonl::get_id(rec, "system_id", line), jsonl::get_id(rec, "example_id", line),
                   jsonl::get_string(rec, "text", line)});
  });
  return out;
}

std::vector<TextRecord> read_references(std::istream& in) {
  std::vector<TextRecord> out;
  jsonl::for_each(in, [&](const jsonl::Json& rec, std::size_t line) {
    jsonl::check_keys(rec, {"example_id", "text"}, {}, line);
    out.push_back({"", jsonl::get_id(rec, "example_id", line), jsonl::get_string(rec, "text", line)});
  });
  return out;
}

std::vector<StatsRecord> score_outputs(const std::vector<TextRecord>& outputs,
                                       const std::vector<TextRecord>& references,
                                       LexicalKind kind) {
  std::map<std::string, const std::string*> refs;
  for (const auto& r : references) {
    if (!refs.emplace(r.example, &r.text).second) {
      throw ValidationError("duplicate reference for example '" + r.example + "'");
    }
  }
  std::vector<StatsRecord> out;
  out.reserve(outputs.size());
  for (const auto& o : outputs) {
    const auto it = refs.find(o.example);
    if (it == refs.end()) throw LookupError("no reference for example '" + o.example + "'");
    out.push_back({o.system, o.example, lexical_stats(o.text, *it->second, kind)});
  }
  return out;
}

}  // namespace activeeval
