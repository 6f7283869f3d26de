#include <algorithm>
#include <cmath>
#include <exception>

#include "activeeval/errors.hpp"
#include "activeeval/harness.hpp"

namespace activeeval {

std::vector<std::size_t> map_examples(const Environment& env, std::size_t examples,
                                      const MetricScoreTable& table) {
  std::vector<std::size_t> out(examples);
  for (std::size_t e = 0; e < examples; ++e) out[e] = table.example_index(env.example_id(e));
  return out;
}

RunTrace run_single(std::shared_ptr<const Environment> env, const RunConfig& cfg,
                    const MetricContext* metric, std::uint64_t seed, const StepSink& sink) {
  if (cfg.checkpoint_stride < 1) throw ConfigError("checkpoint_stride must be >= 1");
  if (cfg.delay < 0) throw ConfigError("delay must be >= 0");
  const bool model_based = cfg.feedback.policy != FeedbackPolicy::kHumanOnly;
  if (model_based && (!metric || !metric->table || !metric->model)) {
    throw ConfigError("model-based feedback needs a metric table and model");
  }
  const long long max_steps = cfg.max_steps > 0 ? cfg.max_steps : 50 * cfg.max_budget + 1000;
  const long long stride = cfg.checkpoint_stride;

  ComposedLearner learner(cfg.algorithm, env->k(), derive_seed(seed, 0), cfg.survivors,
                          cfg.feedback);
  AnnotatorHandle annotator(env, derive_seed(seed, 1));
  Rng feedback_rng(derive_seed(seed, 2));
  DelayQueue queue(cfg.delay);

  RunTrace trace;
  trace.seed = seed;
  trace.checkpoints.reserve(static_cast<std::size_t>(cfg.max_budget / stride) + 1);
  trace.checkpoints.push_back({0, learner.recommend()});

  long long humans = 0;
  while (humans < cfg.max_budget && trace.steps < max_steps && !learner.terminated()) {
    const Pair pair = learner.select_pair();
    const Draw draw = annotator.draw(pair);
    std::optional<PairwisePrediction> prediction;
    if (model_based) {
      const std::size_t column =
          metric->example_map.empty() ? draw.example : metric->example_map.at(draw.example);
      prediction = predict_pair(*metric->table, *metric->model, pair.first, pair.second, column);
    }
    ComparisonOutcome outcome =
        learner.feedback(prediction ? &*prediction : nullptr,
                         [&] { return annotator.consume(pair, draw); }, feedback_rng);
    ++trace.steps;
    if (outcome.source == Source::kModel) ++trace.model_annotations;
    if (sink) {
      outcome.example_id = env->example_id(draw.example);
      sink({trace.steps - 1, pair, outcome.example_id, outcome.value, outcome.source});
    }
    if (auto due = queue.push(std::move(outcome))) learner.update(*due);
    if (annotator.human_count() > humans) {
      humans = annotator.human_count();
      if (humans % stride == 0) trace.checkpoints.push_back({humans, learner.recommend()});
    }
  }

  trace.human_annotations = humans;
  trace.terminated = learner.terminated();
  trace.terminal = learner.recommend();
  // Runs that stop early keep their final recommendation for the rest of the grid.
  for (long long n = trace.checkpoints.back().humans + stride; n <= cfg.max_budget; n += stride) {
    trace.checkpoints.push_back({n, trace.terminal});
  }
  return trace;
}

std::vector<RunTrace> run_seeds_serial(std::shared_ptr<const Environment> env,
                                       const RunConfig& cfg, const MetricContext* metric,
                                       std::uint64_t master_seed, int seeds) {
  std::vector<RunTrace> out;
  out.reserve(static_cast<std::size_t>(std::max(seeds, 0)));
  for (int i = 0; i < seeds; ++i) {
    out.push_back(run_single(env, cfg, metric, derive_seed(master_seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

std::vector<RunTrace> run_seeds(std::shared_ptr<const Environment> env, const RunConfig& cfg,
                                const MetricContext* metric, std::uint64_t master_seed,
                                int seeds) {
  std::vector<RunTrace> out(static_cast<std::size_t>(std::max(seeds, 0)));
  std::vector<std::exception_ptr> errors(out.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < seeds; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    try {
      out[iu] = run_single(env, cfg, metric, derive_seed(master_seed, static_cast<std::uint64_t>(i)));
    } catch (...) {
      errors[iu] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ScalingReport k_scaling_experiment(const AlgorithmSpec& algorithm,
                                   const std::vector<SyntheticSpec>& family,
                                   const ComplexityConfig& cfg, std::uint64_t master_seed,
                                   int replicates) {
  cfg.validate();
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  std::vector<ScalingPoint> points;
  for (std::size_t i = 0; i < family.size(); ++i) {
    auto env = std::make_shared<SyntheticEnvironment>(family[i]);
    const auto truth = env->condorcet_winner();
    if (!truth) throw DegenerateInputError("instance without a Condorcet winner");
    RunConfig run;
    run.algorithm = algorithm;
    run.max_budget = cfg.max_budget;
    run.checkpoint_stride = cfg.checkpoint_stride;
    const auto point_seed = derive_seed(master_seed, i);
    ScalingPoint p{env->k(), {}};
    double sum = 0.0;
    bool reached = true;
    for (int r = 0; r < replicates && reached; ++r) {
      const auto batch_seed = replicates == 1 ? point_seed : derive_seed(point_seed, static_cast<std::uint64_t>(r));
      const auto traces = run_seeds(env, run, nullptr, batch_seed, cfg.seeds);
      const auto c = annotation_complexity(traces, *truth, cfg);
      if (c.complexity)
        sum += static_cast<double>(*c.complexity);
      else
        reached = false;
    }
    if (reached) p.complexity = sum / replicates;
    points.push_back(p);
  }
  return k_scaling(points);
}

// ---- synthetic metric calibration ------------------------------------------

namespace {

LatentCorpusSpec validation_corpus(LatentCorpusSpec corpus) {
  corpus.seed = derive_seed(corpus.seed, 0x76616c);
  return corpus;
}

}  // namespace

CalibrationRecord calibrate_synthetic_metric(const LatentCorpusSpec& corpus,
                                             const SyntheticMetricSpec& metric,
                                             ProbabilityModel variant) {
  const LatentCorpus validation(validation_corpus(corpus));
  SyntheticMetricSpec spec = metric;
  spec.seed = derive_seed(metric.seed, 0x76616c);
  spec.samples = 0;
  const auto table = simulate_metric(validation, spec);
  return calibrate("synthetic", variant, scored_pairs(validation, table));
}

CalibrationRecord calibrate_noise_metric(const LatentCorpusSpec& corpus, std::uint64_t seed,
                                         ProbabilityModel variant) {
  const LatentCorpus validation(validation_corpus(corpus));
  const auto table =
      noise_metric(validation.k(), validation.num_examples(), 0, derive_seed(seed, 0x76616c));
  return calibrate("noise", variant, scored_pairs(validation, table));
}

double noise_for_accuracy(const LatentCorpusSpec& corpus, SyntheticMetricSpec metric,
                          ProbabilityModel variant, double target) {
  if (!(target > 0 && target < 1)) throw ConfigError("target accuracy must lie in (0, 1)");
  auto accuracy = [&](double noise) {
    metric.noise = noise;
    return calibrate_synthetic_metric(corpus, metric, variant).validation_accuracy;
  };
  double lo = 0.0, hi = 1.0;
  while (accuracy(hi) > target) {
    hi *= 2;
    if (hi > 1e3) throw DegenerateInputError("metric accuracy does not fall to the target");
  }
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (accuracy(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double gating_threshold(const MetricScoreTable& table, const PairwiseModel& model,
                        UncertaintyMeasure measure, double human_fraction) {
  if (!table.has_samples()) throw ConfigError("gating needs score samples");
  const UncertaintyConfig cfg{measure, 0.0};
  std::vector<double> scores;
  scores.reserve(num_pairs(table.num_systems()) * table.num_examples());
  for (SystemId i = 0; i < table.num_systems(); ++i) {
    for (SystemId j = i + 1; j < table.num_systems(); ++j) {
      for (std::size_t e = 0; e < table.num_examples(); ++e) {
        if (!table.contains(i, e) || !table.contains(j, e)) continue;
        scores.push_back(uncertainty(cfg, predict_pair(table, model, i, j, e)));
      }
    }
  }
  return threshold_for_human_fraction(std::move(scores), human_fraction);
}

}  // namespace activeeval
