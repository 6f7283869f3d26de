#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "activeeval/environment.hpp"
#include "activeeval/errors.hpp"

namespace ae = activeeval;

namespace {

ae::JudgmentDataset two_system(std::vector<double> outcomes) {
  std::vector<ae::JudgmentRecord> recs;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    recs.push_back({"e" + std::to_string(i), "a", "b", outcomes[i]});
  return ae::JudgmentDataset::from_records(recs);
}

}  // namespace

TEST(JudgmentDataset, SingleRecordAlwaysReturned) {
  const auto ds = two_system({1.0});
  ae::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto d = ds.draw({0, 1}, rng);
    EXPECT_EQ(d.value, 1.0);
    EXPECT_EQ(ds.example_id(d.example), "e0");
  }
}

TEST(JudgmentDataset, UniformOverRecords) {
  const auto ds = two_system({1.0, 0.0});
  ae::Rng rng(2);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += ds.draw({0, 1}, rng).value;
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(JudgmentDataset, OrientationFollowsRequest) {
  const auto ds = ae::JudgmentDataset::from_records({{"e", "b", "a", 1.0}});
  ae::Rng rng(3);
  EXPECT_EQ(ds.draw({1, 0}, rng).value, 1.0);
  EXPECT_EQ(ds.draw({0, 1}, rng).value, 0.0);
  EXPECT_EQ(ds.count(0, 1), 1u);
  EXPECT_DOUBLE_EQ(ds.preference_matrix()(1, 0), 1.0);
}

TEST(JudgmentDataset, CoverageErrors) {
  const auto ds = ae::JudgmentDataset::from_records({{"e", "a", "b", 1.0}, {"e", "b", "c", 0.5}});
  EXPECT_EQ(ds.uncovered_pairs(), (std::vector<ae::Pair>{{0, 2}}));
  EXPECT_THROW(ds.check_coverage(), ae::CoverageError);
  ae::Rng rng(0);
  EXPECT_THROW(ds.draw({2, 0}, rng), ae::CoverageError);
}

TEST(JudgmentDataset, JsonlLineErrors) {
  std::istringstream good(
      "{\"example_id\": \"e1\", \"system_a\": \"x\", \"system_b\": \"y\", \"outcome\": 0.5}\n");
  EXPECT_EQ(ae::JudgmentDataset::read_jsonl(good).size(), 1u);
  std::istringstream bad(
      "{\"example_id\": \"e1\", \"system_a\": \"x\", \"system_b\": \"y\", \"outcome\": 1}\n"
      "{\"example_id\": \"e2\", \"system_a\": \"x\", \"system_b\": \"y\", \"outcome\": 0.3}\n");
  try {
    ae::JudgmentDataset::read_jsonl(bad);
    FAIL();
  } catch (const ae::ValidationError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream self("{\"example_id\": \"e\", \"system_a\": \"x\", \"system_b\": \"x\", \"outcome\": 1}\n");
  EXPECT_THROW(ae::JudgmentDataset::read_jsonl(self), ae::ValidationError);
}

TEST(Conversion, RanksAndScores) {
  const auto r = ae::ranks_to_judgments("e", {"a", "b", "c"}, {2, 1, 2});
  ASSERT_EQ(r.size(), 3u);
  const auto ds = ae::JudgmentDataset::from_records(r);
  const auto m = ds.preference_matrix();
  EXPECT_DOUBLE_EQ(m(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 2), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 2), 0.5);
  const auto s = ae::JudgmentDataset::from_records(
      ae::scores_to_judgments("e", {"a", "b", "c"}, {0.9, 0.1, 0.5}));
  EXPECT_DOUBLE_EQ(s.preference_matrix()(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(s.preference_matrix()(1, 2), 0.0);
}

TEST(Synthetic, BtlWithoutTies) {
  ae::SyntheticEnvironment env(ae::SyntheticSpec::btl({3.0, 1.0}, 0.0));
  ae::Rng rng(4);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += env.draw({0, 1}, rng).value;
  EXPECT_NEAR(sum / n, 0.75, 0.01);
  EXPECT_EQ(env.condorcet_winner(), 0);
}

TEST(Synthetic, AllTies) {
  ae::SyntheticEnvironment env(ae::SyntheticSpec::btl({3.0, 1.0}, 1.0));
  ae::Rng rng(5);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(env.draw({0, 1}, rng).value, 0.5);
}

TEST(Synthetic, ExplicitMatrixFrequencies) {
  const auto m = ae::PreferenceMatrix::from_rows(3, {0.5, 0.2, 0.9, 0.8, 0.5, 0.6, 0.1, 0.4, 0.5});
  ae::SyntheticEnvironment env(ae::SyntheticSpec::explicit_matrix(m, 0.2));
  ae::Rng rng(6);
  const int n = 100000;
  for (auto p : {ae::Pair{0, 1}, ae::Pair{2, 1}, ae::Pair{0, 2}}) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += env.draw(p, rng).value;
    EXPECT_NEAR(sum / n, env.preference_matrix()(p.first, p.second), 0.01);
  }
  EXPECT_EQ(env.condorcet_winner(), 1);
}

TEST(Synthetic, GeometricUtilities) {
  const auto u = ae::geometric_utilities(4, 2.0);
  EXPECT_EQ(u, (std::vector<double>{1, 2, 4, 8}));
  ae::SyntheticEnvironment env(ae::SyntheticSpec::btl(u, 0.2));
  EXPECT_EQ(env.condorcet_winner(), 3);
}

TEST(Delay, ZeroDelayIsImmediate) {
  ae::DelayQueue q(0);
  const ae::ComparisonOutcome o{{0, 1}, 1.0, ae::Source::kHuman, ""};
  const auto out = q.push(o);
  ASSERT_TRUE(out.has_value());
  EXPECT_EQ(out->pair, o.pair);
  EXPECT_EQ(q.pending(), 0u);
}

TEST(Delay, ReleasesAfterDSelections) {
  ae::DelayQueue q(3);
  for (int t = 0; t < 3; ++t)
    EXPECT_FALSE(q.push({{0, 1}, static_cast<double>(t % 2), ae::Source::kHuman, ""}).has_value());
  const auto fourth = q.push({{1, 2}, 0.5, ae::Source::kHuman, ""});
  ASSERT_TRUE(fourth.has_value());
  EXPECT_EQ(fourth->value, 0.0);  // the first outcome
  EXPECT_EQ(q.flush().size(), 3u);
  EXPECT_EQ(q.pending(), 0u);
  EXPECT_THROW(ae::DelayQueue(-1), ae::ConfigError);
}

TEST(Annotators, SharedCounter) {
  auto env = std::make_shared<ae::SyntheticEnvironment>(ae::SyntheticSpec::btl({1, 2, 3}, 0.1));
  ae::AnnotatorPool pool(env, 3, 9);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 5; ++t) pool.annotator(i).query({0, 2});
  EXPECT_EQ(pool.human_count(), 15);
  // A draw alone is free.
  pool.annotator(0).draw({0, 1});
  EXPECT_EQ(pool.human_count(), 15);
}

TEST(Annotators, IndependentStreamsAreDeterministic) {
  auto env = std::make_shared<ae::SyntheticEnvironment>(ae::SyntheticSpec::btl({1, 1}, 0.0));
  ae::AnnotatorPool a(env, 2, 4), b(env, 2, 4);
  std::vector<double> x, y, z;
  for (int t = 0; t < 64; ++t) {
    x.push_back(a.annotator(0).query({0, 1}).value);
    y.push_back(b.annotator(0).query({0, 1}).value);
    z.push_back(a.annotator(1).query({0, 1}).value);
  }
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
}

TEST(LatentCorpus, TruthIsBestSystem) {
  ae::LatentCorpusSpec spec;
  spec.k = 6;
  spec.examples = 500;
  spec.seed = 3;
  const ae::LatentCorpus corpus(spec);
  EXPECT_EQ(corpus.condorcet_winner(), 5);
  const auto m = corpus.preference_matrix();
  double direct = 0.0;
  for (std::size_t e = 0; e < spec.examples; ++e) direct += corpus.judgment({5, 0}, e);
  EXPECT_NEAR(m(5, 0), direct / spec.examples, 1e-12);
  EXPECT_DOUBLE_EQ(corpus.judgment({5, 0}, 7), 1.0 - corpus.judgment({0, 5}, 7));
}

TEST(LatentCorpus, SimulatedMetricTracksQuality) {
  ae::LatentCorpusSpec spec;
  spec.k = 4;
  spec.examples = 300;
  spec.seed = 1;
  const ae::LatentCorpus corpus(spec);
  const auto table = ae::simulate_metric(corpus, {0.3, 0.5, 8, 2});
  EXPECT_EQ(table.roster().name(2), "s02");
  EXPECT_EQ(table.sample_count(), 8u);
  double err = 0.0;
  for (std::size_t e = 0; e < spec.examples; ++e)
    err += std::abs(table.at(1, table.example_index(corpus.example_id(e))).score - corpus.quality(1, e));
  EXPECT_LT(err / spec.examples, 0.5);
  const auto pairs = ae::scored_pairs(corpus, table);
  EXPECT_EQ(pairs.size(), 6u * spec.examples);
  const auto noise = ae::noise_metric(4, 300, 5, 2);
  EXPECT_EQ(noise.num_examples(), 300u);
  EXPECT_EQ(noise.sample_count(), 5u);
}
