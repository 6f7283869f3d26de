#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "activeeval/environment.hpp"
#include "activeeval/harness.hpp"
#include "activeeval/jsonl.hpp"
#include "activeeval/metric_oracle.hpp"
#include "activeeval/model_based.hpp"
#include "activeeval/probability_models.hpp"
#include "activeeval/service.hpp"

using namespace activeeval;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

void print_complexity(const std::vector<AlgorithmResult>& results) {
  write_complexity_csv(std::cout, results);
}

int cmd_run(const std::string& manifest, const std::string& out, bool serial) {
  const Manifest m = Manifest::read(manifest);
  const auto report = run_experiment(m, out, !serial);
  print_complexity(report.results);
  return 0;
}

int cmd_complexity(const std::string& dir, double delta, long long budget, bool curve) {
  ComplexityConfig cfg;
  cfg.delta_acc = delta;
  cfg.max_budget = budget;
  SystemId truth = 0;
  const auto results = load_traces(dir, &truth, cfg);
  if (curve) {
    write_curves_csv(std::cout, results);
  } else {
    print_complexity(results);
  }
  return 0;
}

int cmd_scaling(const std::string& algorithm, const std::vector<int>& ks, double ratio,
                double ties, int seeds, long long budget, long long stride, std::uint64_t seed,
                int replicates) {
  std::vector<SyntheticSpec> family;
  for (int k : ks) family.push_back(SyntheticSpec::btl(geometric_utilities(k, ratio), ties));
  ComplexityConfig cfg;
  cfg.seeds = seeds;
  cfg.max_budget = budget;
  cfg.checkpoint_stride = stride;
  const auto r = k_scaling_experiment(AlgorithmSpec::named(algorithm), family, cfg, seed, replicates);
  std::cout << "k,complexity\n";
  for (const auto& p : r.points) {
    std::cout << p.k << ',' << (p.complexity ? std::to_string(static_cast<long long>(*p.complexity))
                                             : "not_identified")
              << '\n';
  }
  std::cout << "fit,slope,intercept,rss\n"
            << "linear," << r.linear.slope << ',' << r.linear.intercept << ',' << r.linear.rss << '\n'
            << "quadratic," << r.quadratic.slope << ',' << r.quadratic.intercept << ','
            << r.quadratic.rss << '\n'
            << "preferred," << r.preferred << ",,\n";
  for (int k : r.excluded) std::cerr << "warning: k=" << k << " not identified, excluded\n";
  return 0;
}

int cmd_score(const std::string& outputs, const std::string& references, const std::string& metric,
              std::size_t samples, std::uint64_t seed) {
  auto out_in = open_in(outputs);
  auto ref_in = open_in(references);
  const auto stats = score_outputs(read_outputs(out_in), read_references(ref_in),
                                   parse_lexical_kind(metric));
  if (samples >= 2) {
    bootstrap_samples(stats, samples, seed).write_jsonl(std::cout);
  } else {
    std::vector<ScoreRecord> records;
    for (const auto& s : stats) records.push_back({s.system, s.example, score_from_stats(s.stats), {}});
    MetricScoreTable::from_records(std::move(records)).write_jsonl(std::cout);
  }
  return 0;
}

int cmd_calibrate(const std::string& scores, const std::string& judgments, const std::string& model,
                  const std::string& metric) {
  auto s_in = open_in(scores);
  const auto table = MetricScoreTable::read_jsonl(s_in);
  auto j_in = open_in(judgments);
  std::vector<ScoredPair> validation;
  jsonl::for_each(j_in, [&](const jsonl::Json& rec, std::size_t line) {
    jsonl::check_keys(rec, {"example_id", "system_a", "system_b", "outcome"}, {}, line);
    const std::string ex = jsonl::get_id(rec, "example_id", line);
    const auto& a = table.at(jsonl::get_id(rec, "system_a", line), ex);
    const auto& b = table.at(jsonl::get_id(rec, "system_b", line), ex);
    validation.push_back({a.score, b.score, jsonl::get_number(rec, "outcome", line)});
  });
  write_calibration(std::cout, calibrate(metric, parse_probability_model(model), validation));
  return 0;
}

int cmd_eliminate(const std::string& scores, const std::string& calibration, double alpha,
                  double tau) {
  auto s_in = open_in(scores);
  const auto table = MetricScoreTable::read_jsonl(s_in);
  auto c_in = open_in(calibration);
  const auto records = read_calibrations(c_in);
  if (records.empty()) throw ConfigError("no calibration records in " + calibration);
  const auto report = ucb_eliminate(table, records.front().model, {alpha, tau});
  report.write_csv(std::cout, table.roster());
  return 0;
}

Server* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& data_dir, std::string token) {
  if (token.empty()) {
    if (const char* env = std::getenv("ACTIVEEVAL_TOKEN")) token = env;
  }
  SessionManager sessions(data_dir);
  Server server(sessions, {host, port, token});
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "serving on " << host << ':' << port << " with " << sessions.ids().size()
            << " recovered sessions\n";
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active evaluation of text-generation systems with dueling bandits"};
  app.require_subcommand(1);

  std::string manifest, out_dir, traces, algorithm = "rmed", metric = "chrf", model = "linear";
  std::string outputs, references, scores, judgments, calibration, metric_name = "metric";
  std::string host = "127.0.0.1", data_dir = "sessions", token;
  bool serial = false;
  double delta = 0.05, ratio = 1.3, ties = 0.2, alpha = 0.6, tau = 0.8;
  long long budget = 50000, stride = 10;
  int seeds = 200, port = 8080, replicates = 1;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<int> ks{4, 8, 12, 16};

  auto* run = app.add_subcommand("run", "Run a manifest and write a report bundle");
  run->add_option("--manifest", manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Report directory")->required();
  run->add_flag("--serial", serial, "Run seeds on one thread");

  auto* complexity = app.add_subcommand("complexity", "Complexity table from a report bundle");
  complexity->add_option("--traces", traces, "Report directory")->required()->check(CLI::ExistingDirectory);
  complexity->add_option("--delta", delta, "Allowed failure probability");
  complexity->add_option("--max-budget", budget, "Largest checkpoint considered");

  auto* curve = app.add_subcommand("curve", "Accuracy curves from a report bundle");
  curve->add_option("--traces", traces, "Report directory")->required()->check(CLI::ExistingDirectory);

  auto* scaling = app.add_subcommand("scaling", "Complexity against k on BTL instances");
  scaling->add_option("--algorithm", algorithm, "Learner name");
  scaling->add_option("--k", ks, "k values")->delimiter(',');
  scaling->add_option("--ratio", ratio, "Geometric utility ratio");
  scaling->add_option("--ties", ties, "Tie probability");
  scaling->add_option("--seeds", seeds, "Seeds per k");
  scaling->add_option("--budget", budget, "Human annotation budget");
  scaling->add_option("--stride", stride, "Checkpoint stride");
  scaling->add_option("--seed", seed, "Master seed");
  scaling->add_option("--replicates", replicates, "Seed batches averaged per k");

  auto* score = app.add_subcommand("score", "Score system outputs with a lexical metric");
  score->add_option("--outputs", outputs, "Outputs JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--references", references, "References JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--metric", metric, "chrf or bleu");
  score->add_option("--samples", samples, "Bootstrap samples per entry (0 for none)");
  score->add_option("--seed", seed, "Bootstrap seed");

  auto* cal = app.add_subcommand("calibrate", "Fit a probability model and tie thresholds");
  cal->add_option("--scores", scores, "Score table JSONL")->required()->check(CLI::ExistingFile);
  cal->add_option("--judgments", judgments, "Validation judgments JSONL")->required()->check(CLI::ExistingFile);
  cal->add_option("--model", model, "linear, btl or btl_logistic");
  cal->add_option("--name", metric_name, "Metric name stored in the record");

  auto* elim = app.add_subcommand("eliminate", "UCB elimination audit report");
  elim->add_option("--scores", scores, "Score table JSONL with samples")->required()->check(CLI::ExistingFile);
  elim->add_option("--calibration", calibration, "Calibration JSONL")->required()->check(CLI::ExistingFile);
  elim->add_option("--alpha", alpha, "Confidence multiplier");
  elim->add_option("--threshold", tau, "Optimistic Copeland threshold");

  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--data-dir", data_dir, "Session log directory");
  serve->add_option("--token", token, "Bearer token (or ACTIVEEVAL_TOKEN)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(manifest, out_dir, serial);
    if (*complexity) return cmd_complexity(traces, delta, budget, false);
    if (*curve) return cmd_complexity(traces, delta, budget, true);
    if (*scaling) return cmd_scaling(algorithm, ks, ratio, ties, seeds, budget, stride, seed, replicates);
    if (*score) return cmd_score(outputs, references, metric, samples, seed);
    if (*cal) return cmd_calibrate(scores, judgments, model, metric_name);
    if (*elim) return cmd_eliminate(scores, calibration, alpha, tau);
    if (*serve) return cmd_serve(host, port, data_dir, token);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
