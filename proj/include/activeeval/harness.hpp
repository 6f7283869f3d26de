#pragma once

// Experiment driver: seeded runs, annotation complexity, accuracy curves,
// k-scaling fits and manifest-driven report bundles.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "activeeval/core.hpp"
#include "activeeval/environment.hpp"
#include "activeeval/learners.hpp"
#include "activeeval/metric_oracle.hpp"
#include "activeeval/model_based.hpp"
#include "activeeval/probability_models.hpp"
#include "json.hpp"

namespace activeeval {

struct ComplexityConfig {
  int seeds = 200;
  double delta_acc = 0.05;
  long long max_budget = 50000;
  long long checkpoint_stride = 10;

  void validate() const;  // ConfigError
};

struct Checkpoint {
  long long humans = 0;
  SystemId recommendation = 0;
  bool operator==(const Checkpoint&) const = default;
};

struct RunTrace {
  std::uint64_t seed = 0;
  std::vector<Checkpoint> checkpoints;  // n = 0, stride, 2 stride, ... max_budget
  SystemId terminal = 0;
  long long human_annotations = 0;
  long long model_annotations = 0;
  long long steps = 0;
  bool terminated = false;

  bool operator==(const RunTrace&) const = default;
  nlohmann::json to_json() const;
  static RunTrace from_json(const nlohmann::json& j);
};

// `complexity` is the smallest checkpoint n' with accuracy > 1 - delta_acc at
// every checkpoint from n' on; `first_crossing` the first checkpoint above
// the bar. Both are empty when not identified.
struct ComplexityResult {
  std::optional<long long> complexity;
  std::optional<long long> first_crossing;
  double final_accuracy = 0.0;
};

// Throws ConfigError on mismatched checkpoint grids, DegenerateInputError on
// an empty trace set.
ComplexityResult annotation_complexity(const std::vector<RunTrace>& traces, SystemId truth,
                                       const ComplexityConfig& cfg);

struct CurvePoint {
  long long n = 0;
  double accuracy = 0.0;
};

std::vector<CurvePoint> accuracy_curve(const std::vector<RunTrace>& traces, SystemId truth);

// ---- k-scaling -------------------------------------------------------------

struct ScalingPoint {
  int k = 0;
  std::optional<double> complexity;  // empty when not identified
};

struct LeastSquaresFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
};

struct ScalingReport {
  LeastSquaresFit linear;     // complexity ~ a k + b
  LeastSquaresFit quadratic;  // complexity ~ a k^2 + b
  std::string preferred;      // "linear" or "quadratic"
  std::vector<int> excluded;  // k values that were not identified
  std::vector<ScalingPoint> points;
};

// Needs at least 4 distinct k values and 2 identified points.
ScalingReport k_scaling(const std::vector<ScalingPoint>& points);

// ---- runs ------------------------------------------------------------------

// Metric predictions for model-based policies. `example_map` sends an
// environment example index to the table's example index; empty means the
// identity.
struct MetricContext {
  const MetricScoreTable* table = nullptr;
  const PairwiseModel* model = nullptr;
  std::vector<std::size_t> example_map;
};

// Example ids in a table for every example of the environment.
std::vector<std::size_t> map_examples(const Environment& env, std::size_t examples,
                                      const MetricScoreTable& table);

struct RunConfig {
  AlgorithmSpec algorithm;
  ComposeConfig feedback;
  std::vector<SystemId> survivors;  // empty means every system
  int delay = 0;
  long long max_budget = 50000;
  long long checkpoint_stride = 10;
  long long max_steps = 0;  // 0 means 50 x max_budget + 1000
};

struct StepRecord {
  long long seq = 0;
  Pair pair;
  std::string example_id;
  double value = 0.5;
  Source source = Source::kHuman;
};

using StepSink = std::function<void(const StepRecord&)>;

// One seeded run. The learner, annotator and feedback streams are derived
// from `seed`.
RunTrace run_single(std::shared_ptr<const Environment> env, const RunConfig& cfg,
                    const MetricContext* metric, std::uint64_t seed,
                    const StepSink& sink = nullptr);

// Seed i uses derive_seed(master_seed, i). OpenMP over seeds.
std::vector<RunTrace> run_seeds(std::shared_ptr<const Environment> env, const RunConfig& cfg,
                                const MetricContext* metric, std::uint64_t master_seed,
                                int seeds);
// Single-threaded reference with identical output.
std::vector<RunTrace> run_seeds_serial(std::shared_ptr<const Environment> env,
                                       const RunConfig& cfg, const MetricContext* metric,
                                       std::uint64_t master_seed, int seeds);

// Complexity per k on BTL instances; each k gets its own derived master seed.
// With replicates > 1 the point is the mean complexity over that many
// independent batches of cfg.seeds runs; a batch that never reaches the bar
// drops the point.
ScalingReport k_scaling_experiment(const AlgorithmSpec& algorithm,
                                   const std::vector<SyntheticSpec>& family,
                                   const ComplexityConfig& cfg, std::uint64_t master_seed,
                                   int replicates = 1);

// ---- synthetic metric calibration ------------------------------------------

// Fits `variant` on a validation corpus drawn from `corpus` with a distinct
// seed and scored by the same metric spec.
CalibrationRecord calibrate_synthetic_metric(const LatentCorpusSpec& corpus,
                                             const SyntheticMetricSpec& metric,
                                             ProbabilityModel variant);
// Same for a metric that ignores quality.
CalibrationRecord calibrate_noise_metric(const LatentCorpusSpec& corpus, std::uint64_t seed,
                                         ProbabilityModel variant);

// Score noise whose calibrated validation accuracy is closest to `target`,
// by bisection.
double noise_for_accuracy(const LatentCorpusSpec& corpus, SyntheticMetricSpec metric,
                          ProbabilityModel variant, double target);

// Uncertainty threshold sending about `human_fraction` of the table's pair
// predictions to humans.
double gating_threshold(const MetricScoreTable& table, const PairwiseModel& model,
                        UncertaintyMeasure measure, double human_fraction);

// ---- manifests -------------------------------------------------------------

struct EnvironmentSpec {
  enum class Kind { kSynthetic, kLatent, kJudgments };
  Kind kind = Kind::kSynthetic;
  SyntheticSpec synthetic;
  LatentCorpusSpec latent;
  std::filesystem::path path;
};

struct MetricSpec {
  enum class Kind { kNone, kSynthetic, kNoise, kFile };
  Kind kind = Kind::kNone;
  SyntheticMetricSpec synthetic;
  std::optional<double> target_accuracy;  // overrides synthetic.noise
  ProbabilityModel variant = ProbabilityModel::kLinear;
  std::filesystem::path scores;
  std::filesystem::path calibration;
};

struct PolicySpec {
  FeedbackPolicy policy = FeedbackPolicy::kHumanOnly;
  double p_m = 0.8;
  UncertaintyMeasure measure = UncertaintyMeasure::kBald;
  std::optional<double> threshold;
  std::optional<double> human_fraction;
};

struct Manifest {
  int schema_version = 1;
  std::uint64_t master_seed = 0;
  EnvironmentSpec environment;
  std::vector<AlgorithmSpec> algorithms;
  PolicySpec policy;
  MetricSpec metric;
  std::optional<UcbEliminationConfig> elimination;
  ComplexityConfig complexity;
  int delay = 0;
  long long max_steps = 0;
  bool write_logs = false;

  // Relative paths resolve against `base`. Errors name the field path, e.g.
  // "complexity.seeds: must be >= 1".
  static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static Manifest read(const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

struct AlgorithmResult {
  std::string algorithm;
  std::vector<RunTrace> traces;
  ComplexityResult complexity;
  std::vector<CurvePoint> curve;
};

struct ExperimentReport {
  SystemId truth = 0;
  std::vector<std::string> systems;
  std::vector<SystemId> survivors;
  std::optional<EliminationReport> elimination;
  std::optional<double> metric_accuracy;
  std::optional<double> gating_threshold;
  std::vector<AlgorithmResult> results;
};

// Builds the environment and metric, runs every algorithm over the seeds and,
// when `out_dir` is non-empty, writes traces.jsonl, complexity.csv,
// curves.csv, meta.json (plus logs.jsonl when requested).
ExperimentReport run_experiment(const Manifest& manifest, const std::filesystem::path& out_dir,
                                bool parallel = true);

void write_complexity_csv(std::ostream& out, const std::vector<AlgorithmResult>& results);
void write_curves_csv(std::ostream& out, const std::vector<AlgorithmResult>& results);

// Reads traces.jsonl and meta.json from a report directory and recomputes the
// complexity table.
std::vector<AlgorithmResult> load_traces(const std::filesystem::path& dir, SystemId* truth,
                                         const ComplexityConfig& cfg);

}  // namespace activeeval
