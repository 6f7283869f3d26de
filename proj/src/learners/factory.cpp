#include <algorithm>
#include <cctype>
#include <cmath>

#include "activeeval/learners.hpp"
#include "variants.hpp"

namespace activeeval {

namespace {

struct NameEntry {
  Algorithm algorithm;
  std::string_view name;
};

constexpr NameEntry kNames[] = {
    {Algorithm::kUniform, "uniform"},
    {Algorithm::kIF, "if"},
    {Algorithm::kBTM, "btm"},
    {Algorithm::kSequentialElimination, "seq_elim"},
    {Algorithm::kPlackettLuce, "plackett_luce"},
    {Algorithm::kKnockout, "knockout"},
    {Algorithm::kSingleElimination, "single_elim"},
    {Algorithm::kRUCB, "rucb"},
    {Algorithm::kRCS, "rcs"},
    {Algorithm::kRMED, "rmed"},
    {Algorithm::kSAVAGE, "savage"},
    {Algorithm::kCCB, "ccb"},
    {Algorithm::kDTS, "dts"},
    {Algorithm::kDTSPlusPlus, "dts++"},
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate(const AlgorithmSpec& spec) {
  const auto defaults = default_hyperparameters(spec.variant);
  for (const auto& [key, value] : spec.hyperparameters) {
    if (!defaults.count(key)) {
      throw ConfigError("unknown hyperparameter '" + key + "' for " +
                        std::string(algorithm_name(spec.variant)));
    }
    require(std::isfinite(value), "hyperparameter '" + key + "' must be finite");
  }
  const auto v = [&](const char* key) { return spec.get(key, defaults.at(key)); };
  switch (spec.variant) {
    case Algorithm::kRUCB:
    case Algorithm::kRCS:
    case Algorithm::kCCB:
    case Algorithm::kDTS:
    case Algorithm::kDTSPlusPlus:
      require(v("alpha") > 0.5, "alpha must exceed 0.5");
      break;
    case Algorithm::kRMED:
      require(v("f_coef") >= 0, "f_coef must be non-negative");
      break;
    case Algorithm::kKnockout:
      require(v("epsilon") > 0 && v("epsilon") < 0.5, "epsilon must lie in (0, 0.5)");
      require(v("delta") > 0 && v("delta") < 1, "delta must lie in (0, 1)");
      require(v("gamma") > 0, "gamma must be positive");
      break;
    case Algorithm::kSingleElimination:
      require(v("m") >= 1, "m must be at least 1");
      break;
    case Algorithm::kSequentialElimination:
      require(v("epsilon") > 0 && v("epsilon") < 0.5, "epsilon must lie in (0, 0.5)");
      require(v("delta") > 0 && v("delta") < 1, "delta must lie in (0, 1)");
      break;
    case Algorithm::kSAVAGE:
    case Algorithm::kPlackettLuce:
      require(v("delta") > 0 && v("delta") < 1, "delta must lie in (0, 1)");
      break;
    case Algorithm::kIF:
      require(v("horizon") >= 1, "horizon must be at least 1");
      break;
    case Algorithm::kBTM:
      require(v("horizon") >= 1, "horizon must be at least 1");
      require(v("gamma") >= 1, "gamma must be at least 1");
      break;
    case Algorithm::kUniform:
      break;
  }
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  for (const auto& e : kNames) {
    if (e.algorithm == a) return e.name;
  }
  return "uniform";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string n = lower(name);
  for (const auto& e : kNames) {
    if (n == e.name) return e.algorithm;
  }
  if (n == "dtspp" || n == "dts_plus_plus") return Algorithm::kDTSPlusPlus;
  if (n == "interleaved_filter") return Algorithm::kIF;
  if (n == "beat_the_mean") return Algorithm::kBTM;
  if (n == "sequential_elimination") return Algorithm::kSequentialElimination;
  if (n == "single_elimination") return Algorithm::kSingleElimination;
  if (n == "plackettluce" || n == "pl") return Algorithm::kPlackettLuce;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = [] {
    std::vector<Algorithm> v;
    for (const auto& e : kNames) v.push_back(e.algorithm);
    return v;
  }();
  return all;
}

std::map<std::string, double> default_hyperparameters(Algorithm a) {
  switch (a) {
    case Algorithm::kUniform: return {};
    case Algorithm::kIF: return {{"horizon", 1e6}, {"prune", 1.0}};
    case Algorithm::kBTM: return {{"horizon", 1e6}, {"gamma", 1.0}};
    case Algorithm::kSequentialElimination: return {{"epsilon", 0.1}, {"delta", 0.05}};
    case Algorithm::kPlackettLuce: return {{"delta", 0.05}};
    case Algorithm::kKnockout: return {{"epsilon", 0.2}, {"delta", 0.05}, {"gamma", 0.6}};
    case Algorithm::kSingleElimination: return {{"m", 500.0}};
    case Algorithm::kRUCB: return {{"alpha", 0.51}};
    case Algorithm::kRCS: return {{"alpha", 0.501}};
    case Algorithm::kRMED: return {{"f_coef", 0.3}, {"f_exp", 1.01}};
    case Algorithm::kSAVAGE: return {{"delta", 0.05}};
    case Algorithm::kCCB: return {{"alpha", 0.51}};
    case Algorithm::kDTS:
    case Algorithm::kDTSPlusPlus: return {{"alpha", 0.51}};
  }
  return {};
}

double AlgorithmSpec::get(const std::string& key, double fallback) const {
  const auto it = hyperparameters.find(key);
  return it == hyperparameters.end() ? fallback : it->second;
}

AlgorithmSpec AlgorithmSpec::from_json(const nlohmann::json& j) {
  if (j.is_string()) return named(j.get<std::string>());
  if (!j.is_object() || !j.contains("name") || !j.at("name").is_string()) {
    throw ConfigError("algorithm must be a name or an object with a 'name' field");
  }
  AlgorithmSpec spec = named(j.at("name").get<std::string>());
  for (const auto& [key, value] : j.items()) {
    if (key == "name") continue;
    if (!value.is_number()) throw ConfigError("hyperparameter '" + key + "' must be a number");
    spec.hyperparameters[key] = value.get<double>();
  }
  validate(spec);
  return spec;
}

nlohmann::json AlgorithmSpec::to_json() const {
  nlohmann::json j = {{"name", algorithm_name(variant)}};
  for (const auto& [key, value] : hyperparameters) j[key] = value;
  return j;
}

std::unique_ptr<Learner> create_learner(const AlgorithmSpec& spec, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be at least 2");
  validate(spec);
  using namespace detail;
  switch (spec.variant) {
    case Algorithm::kUniform: return std::make_unique<UniformLearner>(spec, k, seed);
    case Algorithm::kIF: return std::make_unique<InterleavedFilter>(spec, k, seed);
    case Algorithm::kBTM: return std::make_unique<BeatTheMean>(spec, k, seed);
    case Algorithm::kSequentialElimination:
      return std::make_unique<SequentialElimination>(spec, k, seed);
    case Algorithm::kPlackettLuce: return std::make_unique<PlackettLuce>(spec, k, seed);
    case Algorithm::kKnockout: return std::make_unique<Knockout>(spec, k, seed);
    case Algorithm::kSingleElimination: return std::make_unique<SingleElimination>(spec, k, seed);
    case Algorithm::kRUCB: return std::make_unique<Rucb>(spec, k, seed);
    case Algorithm::kRCS: return std::make_unique<Rcs>(spec, k, seed);
    case Algorithm::kRMED: return std::make_unique<Rmed>(spec, k, seed);
    case Algorithm::kSAVAGE: return std::make_unique<Savage>(spec, k, seed);
    case Algorithm::kCCB: return std::make_unique<Ccb>(spec, k, seed);
    case Algorithm::kDTS: return std::make_unique<Dts>(spec, k, seed, false);
    case Algorithm::kDTSPlusPlus: return std::make_unique<Dts>(spec, k, seed, true);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace activeeval
