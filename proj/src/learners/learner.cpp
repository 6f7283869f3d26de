#include <cmath>
#include <limits>
#include <stdexcept>

#include "activeeval/learners.hpp"

namespace activeeval {

Learner::Learner(AlgorithmSpec spec, int k, std::uint64_t seed)
    : spec_(std::move(spec)), k_(k), seed_(seed), rng_(seed), counts_(k) {
  if (k < 2) throw ConfigError("k must be at least 2");
}

Pair Learner::select_pair() {
  if (winner_) throw TerminatedError(*winner_);
  const Pair p = do_select();
  if (p.first == p.second || p.first < 0 || p.second < 0 || p.first >= k_ || p.second >= k_) {
    throw std::logic_error("learner produced an invalid pair");
  }
  ++selections_;
  if (journaling_) journal_.push_back({true, p, 0.0, Source::kHuman});
  return p;
}

void Learner::update(const ComparisonOutcome& outcome) {
  check_system(k_, outcome.pair.first);
  check_system(k_, outcome.pair.second);
  counts_.record(outcome.pair, outcome.value);
  if (journaling_) journal_.push_back({false, outcome.pair, outcome.value, outcome.source});
  if (!winner_) on_update(outcome);
}

SystemId Learner::recommend() const {
  if (winner_) return *winner_;
  return copeland_winner(copeland_scores(counts_));
}

std::vector<SystemId> Learner::active_set() const {
  std::vector<SystemId> all(static_cast<std::size_t>(k_));
  for (int i = 0; i < k_; ++i) all[static_cast<std::size_t>(i)] = i;
  return all;
}

double Learner::upper(SystemId i, SystemId j, double alpha) const {
  if (i == j) return 0.5;
  const auto n = counts_.trials(i, j);
  if (n == 0) return 1.0;
  const double nn = static_cast<double>(n);
  return counts_.wins(i, j) / nn + std::sqrt(alpha * std::log(time_index()) / nn);
}

double Learner::lower(SystemId i, SystemId j, double alpha) const {
  if (i == j) return 0.5;
  const auto n = counts_.trials(i, j);
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  return counts_.wins(i, j) / nn - std::sqrt(alpha * std::log(time_index()) / nn);
}

std::size_t Learner::argmax_random(const std::vector<double>& v) {
  return argmax_random(v, std::vector<bool>(v.size(), true));
}

std::size_t Learner::argmax_random(const std::vector<double>& v, const std::vector<bool>& allowed) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!allowed[i]) continue;
    if (v[i] > best) {
      best = v[i];
      ties.assign(1, i);
    } else if (v[i] == best) {
      ties.push_back(i);
    }
  }
  if (ties.empty()) throw std::logic_error("argmax over an empty set");
  return ties.size() == 1 ? ties[0] : ties[uniform_index(rng_, ties.size())];
}

nlohmann::json Learner::snapshot() const {
  if (!journaling_) throw ConfigError("snapshot requires journaling");
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : journal_) {
    if (e.is_select) {
      events.push_back({"s", e.pair.first, e.pair.second});
    } else {
      events.push_back({"u", e.pair.first, e.pair.second, e.value, source_name(e.source)});
    }
  }
  return {{"version", 1},
          {"spec", spec_.to_json()},
          {"k", k_},
          {"seed", seed_},
          {"selections", selections_},
          {"events", events}};
}

std::unique_ptr<Learner> restore_learner(const nlohmann::json& snap) {
  try {
    if (snap.at("version").get<int>() != 1) throw ConfigError("unsupported snapshot version");
    auto learner = create_learner(AlgorithmSpec::from_json(snap.at("spec")),
                                  snap.at("k").get<int>(), snap.at("seed").get<std::uint64_t>());
    for (const auto& e : snap.at("events")) {
      const std::string tag = e.at(0).get<std::string>();
      const Pair pair{e.at(1).get<int>(), e.at(2).get<int>()};
      if (tag == "s") {
        if (!(learner->select_pair() == pair)) {
          throw ConfigError("snapshot replay diverged from recorded selection");
        }
      } else if (tag == "u") {
        learner->update({pair, e.at(3).get<double>(), parse_source(e.at(4).get<std::string>()), ""});
      } else {
        throw ConfigError("unknown snapshot event '" + tag + "'");
      }
    }
    return learner;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed snapshot: ") + e.what());
  } catch (const TerminatedError&) {
    throw ConfigError("snapshot selects after termination");
  }
}

}  // namespace activeeval
