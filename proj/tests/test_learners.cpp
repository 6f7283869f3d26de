#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "activeeval/environment.hpp"
#include "activeeval/learners.hpp"
#include "learners/variants.hpp"

namespace ae = activeeval;

namespace {

ae::ComparisonOutcome outcome(ae::Pair p, double v) { return {p, v, ae::Source::kHuman, ""}; }

std::pair<int, int> key(ae::Pair p) { return {std::min(p.first, p.second), std::max(p.first, p.second)}; }

// Runs a learner against a synthetic environment for `steps` selections or
// until it terminates.
void drive(ae::Learner& l, const ae::PreferenceMatrix& m, int steps, std::uint64_t seed) {
  ae::SyntheticEnvironment env(ae::SyntheticSpec::explicit_matrix(m, 0.0));
  ae::Rng rng(seed);
  for (int t = 0; t < steps && !l.terminated(); ++t) {
    const auto p = l.select_pair();
    l.update(outcome(p, env.draw(p, rng).value));
  }
}

}  // namespace

TEST(Factory, NamesRoundTrip) {
  for (auto a : ae::all_algorithms()) {
    EXPECT_EQ(ae::parse_algorithm(ae::algorithm_name(a)), a);
  }
  EXPECT_EQ(ae::all_algorithms().size(), 14u);
  EXPECT_EQ(ae::parse_algorithm("DTSPP"), ae::Algorithm::kDTSPlusPlus);
  EXPECT_THROW(ae::parse_algorithm("ucb1"), ae::ConfigError);
}

TEST(Factory, RejectsBadHyperparameters) {
  ae::AlgorithmSpec s = ae::AlgorithmSpec::named("rucb");
  s.hyperparameters["alpha"] = 0.4;
  EXPECT_THROW(ae::create_learner(s, 4, 0), ae::ConfigError);
  s.hyperparameters = {{"beta", 1.0}};
  EXPECT_THROW(ae::create_learner(s, 4, 0), ae::ConfigError);
  EXPECT_THROW(ae::create_learner(ae::AlgorithmSpec::named("rmed"), 1, 0), ae::ConfigError);
}

TEST(Factory, SpecJson) {
  const auto s = ae::AlgorithmSpec::from_json(nlohmann::json::parse(R"({"name": "rcs", "alpha": 0.6})"));
  EXPECT_EQ(s.variant, ae::Algorithm::kRCS);
  EXPECT_DOUBLE_EQ(s.get("alpha", 0), 0.6);
  EXPECT_EQ(ae::AlgorithmSpec::from_json(s.to_json()).hyperparameters, s.hyperparameters);
}

TEST(Uniform, CandidatePairsAndFrequencies) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("uniform"), 5, 7);
  std::map<std::pair<int, int>, int> freq;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const auto p = l->select_pair();
    ASSERT_NE(p.first, p.second);
    ++freq[key(p)];
  }
  EXPECT_EQ(freq.size(), 10u);
  for (const auto& [pair, c] : freq) EXPECT_NEAR(static_cast<double>(c) / n, 0.1, 0.01);
}

TEST(Rmed, ExplorationConstant) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("rmed"), 10, 0);
  const auto* rmed = dynamic_cast<const ae::detail::Rmed*>(l.get());
  ASSERT_NE(rmed, nullptr);
  EXPECT_NEAR(rmed->exploration(), 0.3 * std::pow(10.0, 1.01), 1e-12);
  EXPECT_NEAR(rmed->exploration(), 3.07, 0.005);
}

TEST(Knockout, FirstRoundHasFourDuelsAndABye) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("knockout"), 9, 3);
  std::set<std::pair<int, int>> duels;
  while (l->active_set().size() == 9u) {
    const auto p = l->select_pair();
    duels.insert(key(p));
    l->update(outcome(p, 1.0));
  }
  EXPECT_EQ(duels.size(), 4u);
  std::set<int> players;
  for (const auto& [a, b] : duels) {
    players.insert(a);
    players.insert(b);
  }
  EXPECT_EQ(players.size(), 8u);  // disjoint duels, one bye
  EXPECT_EQ(l->active_set().size(), 5u);
}

TEST(Knockout, DuelLoserLeavesBracket) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("knockout"), 2, 1);
  while (!l->terminated()) {
    const auto p = l->select_pair();
    l->update(outcome(p, p.first == 1 ? 1.0 : 0.0));
  }
  EXPECT_EQ(l->recommend(), 1);
  EXPECT_EQ(l->active_set(), std::vector<ae::SystemId>{1});
}

TEST(SingleElimination, DeclaredWinnerOverridesCounts) {
  ae::AlgorithmSpec s = ae::AlgorithmSpec::named("single_elim");
  s.hyperparameters["m"] = 3;
  auto l = ae::create_learner(s, 2, 0);
  // Three duel outcomes for system 0, then late outcomes favouring 1.
  for (int t = 0; t < 3; ++t) {
    const auto p = l->select_pair();
    l->update(outcome(p, p.first == 0 ? 1.0 : 0.0));
  }
  ASSERT_TRUE(l->terminated());
  for (int t = 0; t < 10; ++t) l->update(outcome({1, 0}, 1.0));
  EXPECT_EQ(l->recommend(), 0);
  EXPECT_GT(l->counts().estimate(1, 0), 0.5);
}

TEST(Termination, SelectThrowsWithWinner) {
  ae::AlgorithmSpec s = ae::AlgorithmSpec::named("single_elim");
  s.hyperparameters["m"] = 1;
  auto l = ae::create_learner(s, 2, 0);
  const auto p = l->select_pair();
  l->update(outcome(p, 1.0));
  try {
    l->select_pair();
    FAIL() << "expected TerminatedError";
  } catch (const ae::TerminatedError& e) {
    EXPECT_EQ(e.winner(), p.first);
  }
}

TEST(InterleavedFilter, EliminatesDominatedSystem) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("if"), 2, 5);
  int steps = 0;
  while (!l->terminated() && steps < 100000) {
    const auto p = l->select_pair();
    l->update(outcome(p, p.first == 0 ? 1.0 : 0.0));
    ++steps;
  }
  ASSERT_TRUE(l->terminated());
  EXPECT_EQ(l->active_set(), std::vector<ae::SystemId>{0});
  EXPECT_EQ(l->recommend(), 0);
  // The confidence interval sqrt(ln(1 / delta) / n) with delta = 1 / (T K^2)
  // first excludes 0.5 from [1 - c, 1 + c] when c < 0.5.
  const double log_inv_delta = std::log(1e6 * 4.0);
  const auto expected = static_cast<int>(std::floor(log_inv_delta / 0.25)) + 1;
  EXPECT_EQ(steps, expected);
}

TEST(Savage, ResolvedPairNeverReturns) {
  // Pair (0, 1) always goes to 0; every other comparison is a tie and never
  // resolves. (0, 1) leaves the active set at the first n where the observed
  // gap 0.5 exceeds sqrt(ln(4 P n^2 / delta) / (2 n)), P = 3 pairs.
  int n0 = 1;
  while (!(0.5 > std::sqrt(std::log(4.0 * 3 * n0 * n0 / 0.05) / (2.0 * n0)))) ++n0;
  auto l = ae::create_learner(ae::AlgorithmSpec::named("savage"), 3, 2);
  for (int t = 0; t < 5000; ++t) {
    const auto p = l->select_pair();
    const bool zero_one = key(p) == std::make_pair(0, 1);
    l->update(outcome(p, zero_one ? (p.first == 0 ? 1.0 : 0.0) : 0.5));
  }
  EXPECT_FALSE(l->terminated());
  EXPECT_EQ(l->counts().trials(0, 1), n0);
  EXPECT_GT(l->counts().trials(0, 2), 2 * n0);
}

TEST(Rucb, FirstSystemIsAnOptimisticCandidate) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("rucb"), 4, 1);
  for (int t = 0; t < 100; ++t) l->update(outcome({0, 1}, t < 90 ? 1.0 : 0.0));
  // u_10 = 0.1 + sqrt(0.51 ln 101 / 100) < 0.5, so system 1 is never first;
  // unexplored pairs have upper bound 1 and keep 0, 2 and 3 in the running.
  std::set<int> firsts;
  for (int t = 0; t < 200; ++t) {
    const auto p = l->select_pair();
    ASSERT_NE(p.first, p.second);
    firsts.insert(p.first);
  }
  EXPECT_EQ(firsts, (std::set<int>{0, 2, 3}));
}

TEST(Recommend, FreshLearnerPicksLowestIndex) {
  for (auto a : ae::all_algorithms()) {
    auto l = ae::create_learner({a, {}}, 3, 0);
    EXPECT_EQ(l->recommend(), 0) << ae::algorithm_name(a);
  }
}

TEST(Recommend, EmpiricalCopelandWinner) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("uniform"), 3, 0);
  for (int t = 0; t < 10; ++t) {
    l->update(outcome({2, 0}, 1.0));
    l->update(outcome({2, 1}, 1.0));
    l->update(outcome({0, 1}, 1.0));
  }
  EXPECT_EQ(l->recommend(), 2);
}

TEST(AllLearners, FindWinnerOnEasyInstance) {
  const auto m = ae::PreferenceMatrix::from_btl({1, 1.5, 2.25, 4.0, 1.2});
  for (auto a : ae::all_algorithms()) {
    auto l = ae::create_learner({a, {}}, 5, 11);
    drive(*l, m, 30000, 12);
    EXPECT_EQ(l->recommend(), 3) << ae::algorithm_name(a);
    const auto active = l->active_set();
    EXPECT_TRUE(std::count(active.begin(), active.end(), 3) == 1) << ae::algorithm_name(a);
  }
}

TEST(AllLearners, DeterministicForSeed) {
  const auto m = ae::PreferenceMatrix::from_btl({1, 2, 3, 4});
  for (auto a : ae::all_algorithms()) {
    auto x = ae::create_learner({a, {}}, 4, 5);
    auto y = ae::create_learner({a, {}}, 4, 5);
    drive(*x, m, 500, 9);
    drive(*y, m, 500, 9);
    EXPECT_EQ(x->counts(), y->counts()) << ae::algorithm_name(a);
    EXPECT_EQ(x->selections(), y->selections()) << ae::algorithm_name(a);
  }
}

TEST(AllLearners, LateOutOfOrderOutcomesAccepted) {
  const auto m = ae::PreferenceMatrix::from_btl({1, 2, 3, 4});
  ae::SyntheticEnvironment env(ae::SyntheticSpec::explicit_matrix(m, 0.2));
  for (auto a : ae::all_algorithms()) {
    auto l = ae::create_learner({a, {}}, 4, 3);
    ae::Rng rng(1);
    std::vector<ae::Pair> pending;
    for (int t = 0; t < 400 && !l->terminated(); ++t) {
      pending.push_back(l->select_pair());
      if (pending.size() == 5) {
        for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
          l->update(outcome(*it, env.draw(*it, rng).value));
        }
        pending.clear();
      }
    }
    EXPECT_GE(l->counts().total_trials(), 1) << ae::algorithm_name(a);
  }
}

TEST(Snapshot, RestoreReproducesSelections) {
  const auto m = ae::PreferenceMatrix::from_btl({1, 2, 3, 4, 5});
  for (auto a : ae::all_algorithms()) {
    auto l = ae::create_learner({a, {}}, 5, 21);
    drive(*l, m, 300, 2);
    const auto snap = l->snapshot();
    auto r = ae::restore_learner(snap);
    EXPECT_EQ(r->counts(), l->counts()) << ae::algorithm_name(a);
    EXPECT_EQ(r->terminated(), l->terminated());
    if (!l->terminated()) {
      for (int t = 0; t < 20 && !l->terminated(); ++t) {
        const auto p = l->select_pair();
        EXPECT_EQ(p, r->select_pair()) << ae::algorithm_name(a);
        l->update(outcome(p, 1.0));
        r->update(outcome(p, 1.0));
      }
    }
  }
}

TEST(Snapshot, TamperedJournalRejected) {
  auto l = ae::create_learner(ae::AlgorithmSpec::named("rmed"), 4, 21);
  drive(*l, ae::PreferenceMatrix::from_btl({1, 2, 3, 4}), 50, 2);
  auto snap = l->snapshot();
  for (auto& e : snap["events"]) {
    if (e.at(0) == "s") {
      const int a = e.at(1).get<int>();
      e[1] = e.at(2);
      e[2] = a;
      break;
    }
  }
  EXPECT_THROW(ae::restore_learner(snap), ae::ConfigError);
}
