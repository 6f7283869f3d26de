#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "activeeval/environment.hpp"
#include "activeeval/model_based.hpp"
#include "oracles.hpp"

namespace ae = activeeval;

namespace {

ae::PairwiseModel linear_model(double delta) {
  ae::ScorePreprocessor prep;
  prep.variant = ae::ProbabilityModel::kLinear;
  prep.delta = delta;
  return ae::PairwiseModel(prep, {0.45, 0.55});
}

ae::PairwisePrediction prediction(std::vector<double> samples, double outcome) {
  ae::PairwisePrediction p;
  p.pair = {0, 1};
  double m = 0;
  for (double s : samples) m += s;
  p.mean = samples.empty() ? 0.5 : m / samples.size();
  p.samples = std::move(samples);
  p.outcome = outcome;
  return p;
}

ae::HumanQuery human_counter(int& calls) {
  return [&calls] {
    ++calls;
    return ae::ComparisonOutcome{{0, 1}, 0.0, ae::Source::kHuman, ""};
  };
}

// Random table: k systems, n examples, L samples each.
ae::MetricScoreTable random_table(int k, int n, int L, std::uint64_t seed, oracle::Samples* out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> q(0.0, 1.0), s(0.0, 0.3);
  std::vector<ae::ScoreRecord> recs;
  out->assign(static_cast<std::size_t>(k), {});
  for (int i = 0; i < k; ++i) {
    const double skill = 0.15 * i;
    for (int e = 0; e < n; ++e) {
      const double base = skill + 0.3 * q(rng);
      std::vector<double> samples;
      for (int l = 0; l < L; ++l) samples.push_back(base + s(rng));
      (*out)[i].push_back(samples);
      recs.push_back({ae::system_name(i), "e" + std::to_string(1000 + e), base, samples});
    }
  }
  return ae::MetricScoreTable::from_records(std::move(recs));
}

}  // namespace

TEST(Bald, Examples) {
  EXPECT_DOUBLE_EQ(ae::bald_score({0.9, 0.9}), 0.0);
  EXPECT_NEAR(ae::bald_score({0.1, 0.9}, ae::EntropyBase::kBit), 1.0 - oracle::entropy_bits(0.1),
              1e-12);
  EXPECT_NEAR(ae::bald_score({0.1, 0.9}, ae::EntropyBase::kBit), 0.531, 5e-4);
  EXPECT_DOUBLE_EQ(ae::bald_score({0.0, 1.0}, ae::EntropyBase::kBit), 1.0);
  EXPECT_THROW(ae::bald_score({}), ae::DegenerateInputError);
}

TEST(Bald, MatchesFormulaAndIsNonNegative) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(2 + t % 19);
    for (auto& v : s) v = u(rng);
    const double b = ae::bald_score(s);
    EXPECT_GE(b, 0.0);
    EXPECT_NEAR(b, oracle::bald_nats(s), 1e-12);
  }
}

TEST(StdScore, Examples) {
  EXPECT_DOUBLE_EQ(ae::std_score({0.5, 0.5}), 0.0);
  EXPECT_NEAR(ae::std_score({0.1, 0.9}), 0.4, 1e-12);
  EXPECT_NEAR(ae::std_score({0.2, 0.4, 0.6, 0.8}), std::sqrt(0.05), 1e-12);
}

TEST(RandomMixing, ZeroAndOne) {
  ae::Rng rng(3);
  int calls = 0;
  const auto pred = prediction({0.7, 0.8}, 1.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(ae::random_mixing_feedback({0.0}, pred, human_counter(calls), rng).source,
              ae::Source::kHuman);
  }
  EXPECT_EQ(calls, 1000);
  for (int i = 0; i < 1000; ++i) {
    const auto o = ae::random_mixing_feedback({1.0}, pred, human_counter(calls), rng);
    EXPECT_EQ(o.source, ae::Source::kModel);
    EXPECT_EQ(o.value, 1.0);
  }
  EXPECT_EQ(calls, 1000);
}

TEST(RandomMixing, ModelFraction) {
  ae::Rng rng(5);
  int calls = 0;
  const auto pred = prediction({0.7, 0.8}, 1.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ae::random_mixing_feedback({0.8}, pred, human_counter(calls), rng);
  EXPECT_NEAR(1.0 - static_cast<double>(calls) / n, 0.8, 0.01);
}

TEST(Gating, StrictThreshold) {
  int calls = 0;
  const ae::UncertaintyConfig cfg{ae::UncertaintyMeasure::kBald, 0.0};
  EXPECT_EQ(ae::uncertainty_gated_feedback(cfg, prediction({0.4, 0.6}, 0.5), human_counter(calls)).source,
            ae::Source::kHuman);
  EXPECT_EQ(ae::uncertainty_gated_feedback(cfg, prediction({0.6, 0.6}, 1.0), human_counter(calls)).source,
            ae::Source::kModel);
  EXPECT_EQ(calls, 1);
  const ae::UncertaintyConfig sd{ae::UncertaintyMeasure::kStd, 0.05};
  EXPECT_EQ(ae::uncertainty_gated_feedback(sd, prediction({0.2, 0.4}, 0.0), human_counter(calls)).source,
            ae::Source::kHuman);
  EXPECT_THROW(ae::uncertainty_gated_feedback(cfg, prediction({}, 0.5), human_counter(calls)),
               ae::ConfigError);
}

TEST(Gating, QuantileThresholdSetsHumanFraction) {
  oracle::Samples samples;
  const auto table = random_table(6, 50, 10, 8, &samples);
  const auto model = linear_model(2.0);
  std::vector<double> scores;
  std::vector<ae::PairwisePrediction> preds;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      for (std::size_t e = 0; e < 50; ++e) {
        preds.push_back(ae::predict_pair(table, model, i, j, e));
        scores.push_back(ae::bald_score(preds.back().samples));
      }
  for (double q : {0.1, 0.25, 0.5}) {
    const double thr = ae::threshold_for_human_fraction(scores, q);
    int calls = 0;
    for (const auto& p : preds) {
      ae::uncertainty_gated_feedback({ae::UncertaintyMeasure::kBald, thr}, p, human_counter(calls));
    }
    EXPECT_NEAR(static_cast<double>(calls) / preds.size(), q, 1.0 / preds.size() + 1e-12);
  }
  EXPECT_DOUBLE_EQ(ae::threshold_for_human_fraction(scores, 1.0), 0.0);
}

TEST(MixingRate, AccuracyBands) {
  EXPECT_DOUBLE_EQ(ae::mixing_rate_for_accuracy(0.85), 0.8);
  EXPECT_DOUBLE_EQ(ae::mixing_rate_for_accuracy(0.70), 0.8);
  EXPECT_NEAR(ae::mixing_rate_for_accuracy(0.675), 0.6, 1e-12);
  EXPECT_NEAR(ae::mixing_rate_for_accuracy(0.65), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(ae::mixing_rate_for_accuracy(0.5), 0.0);
}

TEST(Elimination, OptimisticWinFromUpperBound) {
  // Linear with delta 0.5: p_l = 0.5 + (a_l - b_l), here 0.25 and 0.65.
  const auto table = ae::MetricScoreTable::from_records(
      {{"a", "e", 0.2, {0.0, 0.4}}, {"b", "e", 0.25, {0.25, 0.25}}});
  const auto r = ae::ucb_eliminate(table, linear_model(0.5), {0.5, 0.8});
  EXPECT_NEAR(r.p_hat[0 * 2 + 1], 0.45, 1e-12);
  EXPECT_NEAR(r.sigma[0 * 2 + 1], 0.2, 1e-12);
  EXPECT_NEAR(r.upper[0 * 2 + 1], 0.55, 1e-12);
  EXPECT_NEAR(r.upper[1 * 2 + 0], 0.65, 1e-12);
  EXPECT_EQ(r.optimistic_copeland, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(r.survivors(), (std::vector<ae::SystemId>{0, 1}));
}

TEST(Elimination, HugeAlphaKeepsEveryone) {
  oracle::Samples samples;
  const auto table = random_table(6, 20, 5, 2, &samples);
  const auto r = ae::ucb_eliminate(table, linear_model(2.0), {1e9, 0.8});
  for (double c : r.optimistic_copeland) EXPECT_DOUBLE_EQ(c, 1.0);
  EXPECT_EQ(r.survivors().size(), 6u);
}

TEST(Elimination, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    oracle::Samples samples;
    const auto table = random_table(4, 30, 8, seed, &samples);
    const auto r = ae::ucb_eliminate(table, linear_model(1.5), {0.6, 0.8});
    const auto ref = oracle::ucb_linear(samples, 1.5, 0.6, 0.8);
    for (std::size_t i = 0; i < ref.upper.size(); ++i) {
      if (i % 5 == 0) continue;  // diagonal
      EXPECT_NEAR(r.upper[i], ref.upper[i], 1e-9 * std::max(1.0, std::abs(ref.upper[i])));
    }
    EXPECT_EQ(r.optimistic_copeland, ref.copeland);
    EXPECT_EQ(r.survived, ref.survived);
  }
}

TEST(Elimination, OptimismGrowsWithAlpha) {
  oracle::Samples samples;
  const auto table = random_table(7, 25, 6, 13, &samples);
  std::vector<double> prev(7, 0.0);
  for (double alpha : {0.0, 0.3, 0.6, 1.0, 2.0, 5.0}) {
    const auto r = ae::ucb_eliminate(table, linear_model(2.0), {alpha, 0.8});
    for (int i = 0; i < 7; ++i) EXPECT_GE(r.optimistic_copeland[i], prev[i]);
    prev = r.optimistic_copeland;
  }
}

TEST(Elimination, SerialMatchesParallel) {
  oracle::Samples samples;
  const auto table = random_table(8, 40, 10, 4, &samples);
  const auto a = ae::ucb_eliminate(table, linear_model(2.0), {0.6, 0.8});
  const auto b = ae::ucb_eliminate_serial(table, linear_model(2.0), {0.6, 0.8});
  EXPECT_EQ(a.p_hat, b.p_hat);
  EXPECT_EQ(a.sigma, b.sigma);
  EXPECT_EQ(a.survived, b.survived);
}

TEST(Elimination, ConfigChecks) {
  oracle::Samples samples;
  const auto table = random_table(3, 5, 2, 1, &samples);
  EXPECT_THROW(ae::ucb_eliminate(table, linear_model(1), {-0.1, 0.8}), ae::ConfigError);
  EXPECT_THROW(ae::ucb_eliminate(table, linear_model(1), {0.6, 0.0}), ae::ConfigError);
  const auto flat = ae::MetricScoreTable::from_records({{"a", "e", 0.1, {}}, {"b", "e", 0.2, {}}});
  EXPECT_THROW(ae::ucb_eliminate(flat, linear_model(1), {0.6, 0.8}), ae::ConfigError);
}

TEST(Elimination, CsvReport) {
  oracle::Samples samples;
  const auto table = random_table(3, 5, 2, 1, &samples);
  const auto r = ae::ucb_eliminate(table, linear_model(2.0), {0.6, 0.8});
  std::ostringstream out;
  r.write_csv(out, table.roster());
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "system,opponent,p_hat,sigma,upper,examples,optimistic_copeland,survived");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Compose, SingleSurvivorRecommendsImmediately) {
  auto c = ae::compose(ae::AlgorithmSpec::named("rmed"), 5, 0, {3}, {});
  EXPECT_TRUE(c->terminated());
  EXPECT_EQ(c->recommend(), 3);
  try {
    c->select_pair();
    FAIL();
  } catch (const ae::TerminatedError& e) {
    EXPECT_EQ(e.winner(), 3);
  }
}

TEST(Compose, MapsSurvivorIds) {
  auto c = ae::compose(ae::AlgorithmSpec::named("uniform"), 6, 1, {5, 1, 3, 3}, {});
  EXPECT_EQ(c->survivors(), (std::vector<ae::SystemId>{1, 3, 5}));
  for (int t = 0; t < 200; ++t) {
    const auto p = c->select_pair();
    EXPECT_TRUE(p.first % 2 == 1 && p.second % 2 == 1);
    c->update({p, 1.0, ae::Source::kHuman, ""});
  }
  c->update({{0, 2}, 1.0, ae::Source::kHuman, ""});  // eliminated systems, ignored
  EXPECT_EQ(c->inner()->counts().total_trials(), 200);
}

TEST(Compose, HumanOnlyMatchesUnwrappedLearner) {
  const auto m = ae::PreferenceMatrix::from_btl({1, 2, 3, 4, 5});
  for (auto a : {"rmed", "rucb", "dts", "knockout"}) {
    auto plain = ae::create_learner(ae::AlgorithmSpec::named(a), 5, 17);
    auto wrapped = ae::compose(ae::AlgorithmSpec::named(a), 5, 17, {}, {});
    ae::SyntheticEnvironment env(ae::SyntheticSpec::explicit_matrix(m, 0.1));
    ae::Rng r1(2), r2(2), mix(3);
    for (int t = 0; t < 500 && !plain->terminated(); ++t) {
      const auto p = plain->select_pair();
      const auto q = wrapped->select_pair();
      ASSERT_EQ(p, q) << a;
      const auto o1 = ae::ComparisonOutcome{p, env.draw(p, r1).value, ae::Source::kHuman, ""};
      const auto o2 = wrapped->feedback(
          nullptr, [&] { return ae::ComparisonOutcome{q, env.draw(q, r2).value, ae::Source::kHuman, ""}; },
          mix);
      plain->update(o1);
      wrapped->update(o2);
    }
    EXPECT_EQ(plain->counts(), wrapped->inner()->counts()) << a;
    EXPECT_EQ(plain->recommend(), wrapped->recommend()) << a;
  }
}

TEST(Compose, PolicyNeedsPrediction) {
  ae::ComposeConfig cfg;
  cfg.policy = ae::FeedbackPolicy::kRandomMixing;
  auto c = ae::compose(ae::AlgorithmSpec::named("rmed"), 3, 0, {}, cfg);
  ae::Rng rng(0);
  int calls = 0;
  EXPECT_THROW(c->feedback(nullptr, human_counter(calls), rng), ae::ConfigError);
  EXPECT_EQ(ae::parse_feedback_policy("uncertainty_gated"), ae::FeedbackPolicy::kUncertaintyGated);
  EXPECT_THROW(ae::parse_feedback_policy("sometimes"), ae::ConfigError);
}
