#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "activeeval/errors.hpp"
#include "activeeval/harness.hpp"

namespace activeeval {

namespace {

using Json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

double number(const Json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(join(path, key), "must be a number");
  return j.at(key).get<double>();
}

long long integer(const Json& j, const std::string& path, const char* key, long long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) fail(join(path, key), "must be an integer");
  return j.at(key).get<long long>();
}

std::uint64_t seed_of(const Json& j, const std::string& path, const char* key,
                      std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer()) {
    fail(join(path, key), "must be a non-negative integer");
  }
  if (j.at(key).is_number_integer() && j.at(key).get<long long>() < 0) {
    fail(join(path, key), "must be a non-negative integer");
  }
  return j.at(key).get<std::uint64_t>();
}

std::string text(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(join(path, key), "is required");
  if (!j.at(key).is_string()) fail(join(path, key), "must be a string");
  return j.at(key).get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

EnvironmentSpec parse_environment(const Json& j, const std::filesystem::path& base) {
  const std::string path = "environment";
  if (!j.is_object()) fail(path, "must be an object");
  EnvironmentSpec env;
  const std::string type = text(j, path, "type");
  if (type == "btl") {
    allow_keys(j, path, {"type", "k", "ratio", "utilities", "tie_probability", "examples"});
    std::vector<double> u;
    if (j.contains("utilities")) {
      if (!j.at("utilities").is_array()) fail(path + ".utilities", "must be an array");
      for (const auto& v : j.at("utilities")) {
        if (!v.is_number() || v.get<double>() <= 0) fail(path + ".utilities", "must be positive numbers");
        u.push_back(v.get<double>());
      }
    } else {
      const long long k = integer(j, path, "k", 10);
      if (k < 2) fail(path + ".k", "must be >= 2");
      const double ratio = number(j, path, "ratio", 1.3);
      if (!(ratio > 0)) fail(path + ".ratio", "must be positive");
      u = geometric_utilities(static_cast<int>(k), ratio);
    }
    if (u.size() < 2) fail(path + ".utilities", "needs at least 2 systems");
    const double t = number(j, path, "tie_probability", 0.0);
    if (!(t >= 0 && t < 1)) fail(path + ".tie_probability", "must lie in [0, 1)");
    env.synthetic = SyntheticSpec::btl(std::move(u), t);
    const long long ex = integer(j, path, "examples", 1);
    if (ex < 1) fail(path + ".examples", "must be >= 1");
    env.synthetic.examples = static_cast<std::size_t>(ex);
  } else if (type == "matrix") {
    allow_keys(j, path, {"type", "matrix", "tie_probability", "examples"});
    if (!j.contains("matrix") || !j.at("matrix").is_array()) fail(path + ".matrix", "must be an array of rows");
    std::vector<std::vector<double>> rows;
    try {
      rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    } catch (const Json::exception&) {
      fail(path + ".matrix", "must be an array of numeric rows");
    }
    const double t = number(j, path, "tie_probability", 0.0);
    if (!(t >= 0 && t < 1)) fail(path + ".tie_probability", "must lie in [0, 1)");
    std::vector<double> flat;
    for (const auto& row : rows) {
      if (row.size() != rows.size()) fail(path + ".matrix", "must be square");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    try {
      env.synthetic = SyntheticSpec::explicit_matrix(
          PreferenceMatrix::from_rows(static_cast<int>(rows.size()), flat), t);
    } catch (const Error& e) {
      fail(path + ".matrix", e.what());
    }
    const long long ex = integer(j, path, "examples", 1);
    if (ex < 1) fail(path + ".examples", "must be >= 1");
    env.synthetic.examples = static_cast<std::size_t>(ex);
  } else if (type == "latent") {
    allow_keys(j, path, {"type", "k", "examples", "ratio", "tie_margin", "seed"});
    env.kind = EnvironmentSpec::Kind::kLatent;
    const long long k = integer(j, path, "k", env.latent.k);
    if (k < 2) fail(path + ".k", "must be >= 2");
    env.latent.k = static_cast<int>(k);
    const long long ex = integer(j, path, "examples", static_cast<long long>(env.latent.examples));
    if (ex < 1) fail(path + ".examples", "must be >= 1");
    env.latent.examples = static_cast<std::size_t>(ex);
    env.latent.ratio = number(j, path, "ratio", env.latent.ratio);
    if (!(env.latent.ratio > 0)) fail(path + ".ratio", "must be positive");
    env.latent.tie_margin = number(j, path, "tie_margin", env.latent.tie_margin);
    if (env.latent.tie_margin < 0) fail(path + ".tie_margin", "must be non-negative");
    env.latent.seed = seed_of(j, path, "seed", 0);
  } else if (type == "judgments") {
    allow_keys(j, path, {"type", "path"});
    env.kind = EnvironmentSpec::Kind::kJudgments;
    env.path = resolve(base, text(j, path, "path"));
  } else {
    fail(path + ".type", "must be one of btl, matrix, latent, judgments");
  }
  return env;
}

MetricSpec parse_metric(const Json& j, const std::filesystem::path& base) {
  const std::string path = "metric";
  if (!j.is_object()) fail(path, "must be an object");
  MetricSpec m;
  const std::string type = text(j, path, "type");
  auto variant = [&] {
    if (!j.contains("model")) return;
    try {
      m.variant = parse_probability_model(text(j, path, "model"));
    } catch (const Error& e) {
      fail(path + ".model", e.what());
    }
  };
  auto samples = [&] {
    const long long L = integer(j, path, "samples", 20);
    if (L < 2) fail(path + ".samples", "must be >= 2");
    m.synthetic.samples = static_cast<std::size_t>(L);
  };
  if (type == "synthetic") {
    allow_keys(j, path,
               {"type", "noise", "target_accuracy", "sample_noise", "samples", "seed", "model"});
    m.kind = MetricSpec::Kind::kSynthetic;
    m.synthetic.noise = number(j, path, "noise", m.synthetic.noise);
    if (m.synthetic.noise < 0) fail(path + ".noise", "must be non-negative");
    if (j.contains("target_accuracy")) {
      const double t = number(j, path, "target_accuracy", 0.0);
      if (!(t > 0 && t < 1)) fail(path + ".target_accuracy", "must lie in (0, 1)");
      m.target_accuracy = t;
    }
    m.synthetic.sample_noise = number(j, path, "sample_noise", m.synthetic.sample_noise);
    if (m.synthetic.sample_noise < 0) fail(path + ".sample_noise", "must be non-negative");
    samples();
    m.synthetic.seed = seed_of(j, path, "seed", 0);
    variant();
  } else if (type == "noise") {
    allow_keys(j, path, {"type", "samples", "seed", "model"});
    m.kind = MetricSpec::Kind::kNoise;
    samples();
    m.synthetic.seed = seed_of(j, path, "seed", 0);
    variant();
  } else if (type == "file") {
    allow_keys(j, path, {"type", "scores", "calibration"});
    m.kind = MetricSpec::Kind::kFile;
    m.scores = resolve(base, text(j, path, "scores"));
    m.calibration = resolve(base, text(j, path, "calibration"));
  } else {
    fail(path + ".type", "must be one of synthetic, noise, file");
  }
  return m;
}

PolicySpec parse_policy(const Json& j) {
  const std::string path = "policy";
  allow_keys(j, path, {"name", "p_m", "measure", "threshold", "human_fraction"});
  PolicySpec p;
  try {
    p.policy = parse_feedback_policy(text(j, path, "name"));
  } catch (const ConfigError&) {
    fail(path + ".name", "must be one of human_only, random_mixing, uncertainty_gated");
  }
  p.p_m = number(j, path, "p_m", p.p_m);
  if (!(p.p_m >= 0 && p.p_m <= 1)) fail(path + ".p_m", "must lie in [0, 1]");
  if (j.contains("measure")) {
    const std::string m = text(j, path, "measure");
    if (m == "bald") {
      p.measure = UncertaintyMeasure::kBald;
    } else if (m == "std") {
      p.measure = UncertaintyMeasure::kStd;
    } else {
      fail(path + ".measure", "must be bald or std");
    }
  }
  if (j.contains("threshold")) {
    p.threshold = number(j, path, "threshold", 0.0);
    if (*p.threshold < 0) fail(path + ".threshold", "must be non-negative");
  }
  if (j.contains("human_fraction")) {
    p.human_fraction = number(j, path, "human_fraction", 0.0);
    if (!(*p.human_fraction >= 0 && *p.human_fraction <= 1)) {
      fail(path + ".human_fraction", "must lie in [0, 1]");
    }
  }
  if (p.threshold && p.human_fraction) fail(path, "give threshold or human_fraction, not both");
  if (p.policy == FeedbackPolicy::kUncertaintyGated && !p.threshold && !p.human_fraction) {
    fail(path, "uncertainty_gated needs threshold or human_fraction");
  }
  return p;
}

}  // namespace

Manifest Manifest::from_json(const Json& j, const std::filesystem::path& base) {
  allow_keys(j, "", {"schema_version", "master_seed", "environment", "algorithms", "policy",
                     "metric", "elimination", "complexity", "delay", "max_steps", "write_logs"});
  Manifest m;
  if (!j.contains("schema_version")) fail("schema_version", "is required");
  m.schema_version = static_cast<int>(integer(j, "", "schema_version", 0));
  if (m.schema_version != 1) fail("schema_version", "unsupported version " + std::to_string(m.schema_version));
  m.master_seed = seed_of(j, "", "master_seed", 0);
  if (!j.contains("environment")) fail("environment", "is required");
  m.environment = parse_environment(j.at("environment"), base);

  if (!j.contains("algorithms") || !j.at("algorithms").is_array() || j.at("algorithms").empty()) {
    fail("algorithms", "must be a non-empty array");
  }
  for (std::size_t i = 0; i < j.at("algorithms").size(); ++i) {
    try {
      AlgorithmSpec spec = AlgorithmSpec::from_json(j.at("algorithms")[i]);
      create_learner(spec, 2, 0);  // validates hyperparameters
      m.algorithms.push_back(std::move(spec));
    } catch (const Error& e) {
      fail("algorithms[" + std::to_string(i) + "]", e.what());
    }
  }

  if (j.contains("policy")) m.policy = parse_policy(j.at("policy"));
  if (j.contains("metric")) m.metric = parse_metric(j.at("metric"), base);
  if (j.contains("elimination")) {
    const auto& e = j.at("elimination");
    allow_keys(e, "elimination", {"alpha", "copeland_threshold"});
    UcbEliminationConfig cfg;
    cfg.alpha = number(e, "elimination", "alpha", cfg.alpha);
    if (cfg.alpha < 0) fail("elimination.alpha", "must be non-negative");
    cfg.copeland_threshold = number(e, "elimination", "copeland_threshold", cfg.copeland_threshold);
    if (!(cfg.copeland_threshold > 0 && cfg.copeland_threshold <= 1)) {
      fail("elimination.copeland_threshold", "must lie in (0, 1]");
    }
    m.elimination = cfg;
  }
  if (j.contains("complexity")) {
    const auto& c = j.at("complexity");
    allow_keys(c, "complexity", {"seeds", "delta_acc", "max_budget", "checkpoint_stride"});
    m.complexity.seeds = static_cast<int>(integer(c, "complexity", "seeds", m.complexity.seeds));
    if (m.complexity.seeds < 1) fail("complexity.seeds", "must be >= 1");
    m.complexity.delta_acc = number(c, "complexity", "delta_acc", m.complexity.delta_acc);
    if (!(m.complexity.delta_acc > 0 && m.complexity.delta_acc < 1)) {
      fail("complexity.delta_acc", "must lie in (0, 1)");
    }
    m.complexity.max_budget = integer(c, "complexity", "max_budget", m.complexity.max_budget);
    if (m.complexity.max_budget < 1) fail("complexity.max_budget", "must be >= 1");
    m.complexity.checkpoint_stride =
        integer(c, "complexity", "checkpoint_stride", m.complexity.checkpoint_stride);
    if (m.complexity.checkpoint_stride < 1) fail("complexity.checkpoint_stride", "must be >= 1");
  }
  m.delay = static_cast<int>(integer(j, "", "delay", 0));
  if (m.delay < 0) fail("delay", "must be >= 0");
  m.max_steps = integer(j, "", "max_steps", 0);
  if (m.max_steps < 0) fail("max_steps", "must be >= 0");
  if (j.contains("write_logs")) {
    if (!j.at("write_logs").is_boolean()) fail("write_logs", "must be a boolean");
    m.write_logs = j.at("write_logs").get<bool>();
  }

  const bool needs_metric = m.policy.policy != FeedbackPolicy::kHumanOnly || m.elimination;
  if (needs_metric && m.metric.kind == MetricSpec::Kind::kNone) {
    fail("metric", "is required by the policy or elimination");
  }
  const bool synthetic_metric =
      m.metric.kind == MetricSpec::Kind::kSynthetic || m.metric.kind == MetricSpec::Kind::kNoise;
  if (synthetic_metric && m.environment.kind != EnvironmentSpec::Kind::kLatent) {
    fail("metric.type", "synthetic and noise metrics need a latent environment");
  }
  if (m.metric.kind == MetricSpec::Kind::kFile &&
      m.environment.kind != EnvironmentSpec::Kind::kJudgments) {
    fail("metric.type", "file metrics need a judgments environment");
  }
  return m;
}

Manifest Manifest::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open manifest " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j, file.parent_path());
}

Json Manifest::to_json() const {
  Json j;
  j["schema_version"] = schema_version;
  j["master_seed"] = master_seed;
  switch (environment.kind) {
    case EnvironmentSpec::Kind::kSynthetic:
      if (environment.synthetic.generator == SyntheticSpec::Generator::kBtl) {
        j["environment"] = {{"type", "btl"}, {"utilities", environment.synthetic.utilities}};
      } else {
        std::vector<std::vector<double>> rows;
        const auto& mat = *environment.synthetic.matrix;
        for (int i = 0; i < mat.k(); ++i) {
          rows.emplace_back();
          for (int k = 0; k < mat.k(); ++k) rows.back().push_back(mat(i, k));
        }
        j["environment"] = {{"type", "matrix"}, {"matrix", rows}};
      }
      j["environment"]["tie_probability"] = environment.synthetic.tie_probability;
      j["environment"]["examples"] = environment.synthetic.examples;
      break;
    case EnvironmentSpec::Kind::kLatent:
      j["environment"] = {{"type", "latent"},
                          {"k", environment.latent.k},
                          {"examples", environment.latent.examples},
                          {"ratio", environment.latent.ratio},
                          {"tie_margin", environment.latent.tie_margin},
                          {"seed", environment.latent.seed}};
      break;
    case EnvironmentSpec::Kind::kJudgments:
      j["environment"] = {{"type", "judgments"}, {"path", environment.path.string()}};
      break;
  }
  j["algorithms"] = Json::array();
  for (const auto& a : algorithms) j["algorithms"].push_back(a.to_json());
  j["policy"] = {{"name", feedback_policy_name(policy.policy)}, {"p_m", policy.p_m},
                 {"measure", policy.measure == UncertaintyMeasure::kBald ? "bald" : "std"}};
  if (policy.threshold) j["policy"]["threshold"] = *policy.threshold;
  if (policy.human_fraction) j["policy"]["human_fraction"] = *policy.human_fraction;
  switch (metric.kind) {
    case MetricSpec::Kind::kNone:
      break;
    case MetricSpec::Kind::kSynthetic:
      j["metric"] = {{"type", "synthetic"},
                     {"noise", metric.synthetic.noise},
                     {"sample_noise", metric.synthetic.sample_noise},
                     {"samples", metric.synthetic.samples},
                     {"seed", metric.synthetic.seed},
                     {"model", probability_model_name(metric.variant)}};
      if (metric.target_accuracy) j["metric"]["target_accuracy"] = *metric.target_accuracy;
      break;
    case MetricSpec::Kind::kNoise:
      j["metric"] = {{"type", "noise"},
                     {"samples", metric.synthetic.samples},
                     {"seed", metric.synthetic.seed},
                     {"model", probability_model_name(metric.variant)}};
      break;
    case MetricSpec::Kind::kFile:
      j["metric"] = {{"type", "file"},
                     {"scores", metric.scores.string()},
                     {"calibration", metric.calibration.string()}};
      break;
  }
  if (elimination) {
    j["elimination"] = {{"alpha", elimination->alpha},
                        {"copeland_threshold", elimination->copeland_threshold}};
  }
  j["complexity"] = {{"seeds", complexity.seeds},
                     {"delta_acc", complexity.delta_acc},
                     {"max_budget", complexity.max_budget},
                     {"checkpoint_stride", complexity.checkpoint_stride}};
  j["delay"] = delay;
  j["max_steps"] = max_steps;
  j["write_logs"] = write_logs;
  return j;
}

// ---- experiments -----------------------------------------------------------

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt(const std::optional<long long>& v) {
  return v ? std::to_string(*v) : "not_identified";
}

struct Prepared {
  std::shared_ptr<const Environment> env;
  std::size_t examples = 1;
  std::vector<std::string> systems;
  SystemId truth = 0;
  std::optional<MetricScoreTable> table;
  std::optional<PairwiseModel> model;
  std::optional<double> accuracy;
};

Prepared prepare(const Manifest& m) {
  Prepared p;
  const auto& e = m.environment;
  switch (e.kind) {
    case EnvironmentSpec::Kind::kSynthetic: {
      auto env = std::make_shared<SyntheticEnvironment>(e.synthetic);
      p.examples = e.synthetic.examples;
      p.env = env;
      break;
    }
    case EnvironmentSpec::Kind::kLatent: {
      auto env = std::make_shared<LatentCorpus>(e.latent);
      p.examples = env->num_examples();
      p.env = env;
      break;
    }
    case EnvironmentSpec::Kind::kJudgments: {
      std::ifstream in(e.path);
      if (!in) throw ConfigError("environment.path: cannot open " + e.path.string());
      auto ds = std::make_shared<JudgmentDataset>(JudgmentDataset::read_jsonl(in));
      ds->check_coverage();
      p.examples = ds->examples().size();
      p.systems = ds->roster().names();
      p.env = ds;
      break;
    }
  }
  if (p.systems.empty()) {
    for (SystemId s = 0; s < p.env->k(); ++s) p.systems.push_back(system_name(s));
  }
  const auto truth = p.env->condorcet_winner();
  if (!truth) throw DegenerateInputError("environment has no Condorcet winner");
  p.truth = *truth;

  const auto& mt = m.metric;
  if (mt.kind == MetricSpec::Kind::kSynthetic) {
    SyntheticMetricSpec spec = mt.synthetic;
    if (mt.target_accuracy) {
      spec.noise = noise_for_accuracy(e.latent, spec, mt.variant, *mt.target_accuracy);
    }
    const auto cal = calibrate_synthetic_metric(e.latent, spec, mt.variant);
    p.table = simulate_metric(static_cast<const LatentCorpus&>(*p.env), spec);
    p.model = cal.model;
    p.accuracy = cal.validation_accuracy;
  } else if (mt.kind == MetricSpec::Kind::kNoise) {
    const auto cal = calibrate_noise_metric(e.latent, mt.synthetic.seed, mt.variant);
    p.table = noise_metric(e.latent.k, e.latent.examples, mt.synthetic.samples, mt.synthetic.seed);
    p.model = cal.model;
    p.accuracy = cal.validation_accuracy;
  } else if (mt.kind == MetricSpec::Kind::kFile) {
    std::ifstream scores(mt.scores);
    if (!scores) throw ConfigError("metric.scores: cannot open " + mt.scores.string());
    p.table = MetricScoreTable::read_jsonl(scores);
    std::ifstream cal(mt.calibration);
    if (!cal) throw ConfigError("metric.calibration: cannot open " + mt.calibration.string());
    const auto records = read_calibrations(cal);
    if (records.empty()) throw ConfigError("metric.calibration: no calibration records");
    p.model = records.front().model;
    p.accuracy = records.front().validation_accuracy;
    if (p.table->roster().names() != p.systems) {
      throw ConfigError("metric.scores: systems differ from the judgment roster");
    }
  }
  return p;
}

}  // namespace

ExperimentReport run_experiment(const Manifest& m, const std::filesystem::path& out_dir,
                                bool parallel) {
  m.complexity.validate();
  Prepared p = prepare(m);
  ExperimentReport report;
  report.truth = p.truth;
  report.systems = p.systems;
  report.metric_accuracy = p.accuracy;

  MetricContext ctx;
  if (p.table) {
    ctx.table = &*p.table;
    ctx.model = &*p.model;
    ctx.example_map = map_examples(*p.env, p.examples, *p.table);
  }
  if (m.elimination) {
    report.elimination = parallel ? ucb_eliminate(*p.table, *p.model, *m.elimination)
                                  : ucb_eliminate_serial(*p.table, *p.model, *m.elimination);
    report.survivors = report.elimination->survivors();
  }

  ComposeConfig compose;
  compose.policy = m.policy.policy;
  compose.mixing.p_m = m.policy.p_m;
  compose.gating.measure = m.policy.measure;
  if (m.policy.policy == FeedbackPolicy::kUncertaintyGated) {
    compose.gating.threshold =
        m.policy.threshold ? *m.policy.threshold
                           : gating_threshold(*p.table, *p.model, m.policy.measure,
                                              *m.policy.human_fraction);
    report.gating_threshold = compose.gating.threshold;
  }

  std::ostringstream logs;
  for (std::size_t a = 0; a < m.algorithms.size(); ++a) {
    RunConfig run;
    run.algorithm = m.algorithms[a];
    run.feedback = compose;
    run.survivors = report.survivors;
    run.delay = m.delay;
    run.max_budget = m.complexity.max_budget;
    run.checkpoint_stride = m.complexity.checkpoint_stride;
    run.max_steps = m.max_steps;
    const std::uint64_t master = derive_seed(m.master_seed, a);
    const MetricContext* metric = p.table ? &ctx : nullptr;

    AlgorithmResult r;
    r.algorithm = std::string(algorithm_name(run.algorithm.variant));
    if (m.write_logs) {
      const std::string name = r.algorithm;
      for (int i = 0; i < m.complexity.seeds; ++i) {
        const std::uint64_t seed = derive_seed(master, static_cast<std::uint64_t>(i));
        r.traces.push_back(run_single(p.env, run, metric, seed, [&](const StepRecord& s) {
          logs << Json{{"algorithm", name},
                       {"seed", seed},
                       {"seq", s.seq},
                       {"pair", {s.pair.first, s.pair.second}},
                       {"example_id", s.example_id},
                       {"value", s.value},
                       {"source", source_name(s.source)}}
                      .dump()
               << '\n';
        }));
      }
    } else if (parallel) {
      r.traces = run_seeds(p.env, run, metric, master, m.complexity.seeds);
    } else {
      r.traces = run_seeds_serial(p.env, run, metric, master, m.complexity.seeds);
    }
    r.complexity = annotation_complexity(r.traces, p.truth, m.complexity);
    r.curve = accuracy_curve(r.traces, p.truth);
    report.results.push_back(std::move(r));
  }

  if (out_dir.empty()) return report;
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "traces.jsonl");
    for (const auto& r : report.results) {
      for (const auto& t : r.traces) {
        Json j = t.to_json();
        j["algorithm"] = r.algorithm;
        out << j.dump() << '\n';
      }
    }
  }
  {
    std::ofstream out(out_dir / "complexity.csv");
    write_complexity_csv(out, report.results);
  }
  {
    std::ofstream out(out_dir / "curves.csv");
    write_curves_csv(out, report.results);
  }
  {
    Json meta = {{"schema_version", 1},
                 {"manifest", m.to_json()},
                 {"truth", report.truth},
                 {"systems", report.systems},
                 {"survivors", report.survivors}};
    if (report.metric_accuracy) meta["metric_accuracy"] = *report.metric_accuracy;
    if (report.gating_threshold) meta["gating_threshold"] = *report.gating_threshold;
    if (report.elimination) {
      Roster roster(report.systems);
      meta["elimination"] = report.elimination->to_json(roster);
    }
    std::ofstream out(out_dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  if (m.write_logs) {
    std::ofstream out(out_dir / "logs.jsonl");
    out << logs.str();
  }
  return report;
}

void write_complexity_csv(std::ostream& out, const std::vector<AlgorithmResult>& results) {
  out << "algorithm,complexity,first_crossing,final_accuracy,mean_human_annotations,"
         "mean_model_annotations\n";
  for (const auto& r : results) {
    double humans = 0, models = 0;
    for (const auto& t : r.traces) {
      humans += static_cast<double>(t.human_annotations);
      models += static_cast<double>(t.model_annotations);
    }
    const double n = r.traces.empty() ? 1.0 : static_cast<double>(r.traces.size());
    out << r.algorithm << ',' << opt(r.complexity.complexity) << ','
        << opt(r.complexity.first_crossing) << ',' << fixed(r.complexity.final_accuracy) << ','
        << fixed(humans / n) << ',' << fixed(models / n) << '\n';
  }
}

void write_curves_csv(std::ostream& out, const std::vector<AlgorithmResult>& results) {
  out << "algorithm,n,accuracy\n";
  for (const auto& r : results) {
    for (const auto& c : r.curve) out << r.algorithm << ',' << c.n << ',' << fixed(c.accuracy) << '\n';
  }
}

std::vector<AlgorithmResult> load_traces(const std::filesystem::path& dir, SystemId* truth,
                                         const ComplexityConfig& cfg) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw ConfigError("cannot open " + (dir / "meta.json").string());
  const Json meta = Json::parse(meta_in);
  const SystemId t = meta.at("truth").get<int>();
  if (truth) *truth = t;
  std::ifstream in(dir / "traces.jsonl");
  if (!in) throw ConfigError("cannot open " + (dir / "traces.jsonl").string());
  std::vector<AlgorithmResult> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      const std::string name = j.at("algorithm").get<std::string>();
      auto it = index.find(name);
      if (it == index.end()) {
        it = index.emplace(name, out.size()).first;
        out.push_back({name, {}, {}, {}});
      }
      out[it->second].traces.push_back(RunTrace::from_json(j));
    } catch (const Json::exception& e) {
      throw ValidationError(e.what(), n);
    }
  }
  for (auto& r : out) {
    r.complexity = annotation_complexity(r.traces, t, cfg);
    r.curve = accuracy_curve(r.traces, t);
  }
  return out;
}

}  // namespace activeeval
