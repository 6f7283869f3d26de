#include "activeeval/probability_models.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "activeeval/core.hpp"
#include "activeeval/errors.hpp"
#include "activeeval/jsonl.hpp"

namespace activeeval {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string_view btl_shift_name(BtlShift s) {
  return s == BtlShift::kMinToZero ? "min_to_zero" : "subtract_max";
}

BtlShift parse_btl_shift(std::string_view name) {
  if (name == "min_to_zero") return BtlShift::kMinToZero;
  if (name == "subtract_max") return BtlShift::kSubtractMax;
  throw ConfigError("unknown BTL shift '" + std::string(name) + "'");
}

}  // namespace

std::string_view probability_model_name(ProbabilityModel m) {
  switch (m) {
    case ProbabilityModel::kLinear: return "linear";
    case ProbabilityModel::kBtl: return "btl";
    case ProbabilityModel::kBtlLogistic: return "btl_logistic";
  }
  return "linear";
}

ProbabilityModel parse_probability_model(std::string_view name) {
  if (name == "linear") return ProbabilityModel::kLinear;
  if (name == "btl") return ProbabilityModel::kBtl;
  if (name == "btl_logistic" || name == "btl-logistic") return ProbabilityModel::kBtlLogistic;
  throw ConfigError("unknown probability model '" + std::string(name) + "'");
}

double ScorePreprocessor::apply(double raw) const {
  switch (variant) {
    case ProbabilityModel::kLinear:
      return delta > 0 ? raw / (2.0 * delta) : 0.0;
    case ProbabilityModel::kBtl:
      if (btl_shift == BtlShift::kMinToZero) return std::max(0.0, raw - shift);
      return raw - shift;
    case ProbabilityModel::kBtlLogistic:
      return raw / gamma;
  }
  return raw;
}

void validate_thresholds(const ThresholdPair& t) {
  if (!(t.tau1 >= 0.4 && t.tau1 <= 0.5 && t.tau2 >= 0.5 && t.tau2 <= 0.6)) {
    throw ConfigError("thresholds must satisfy 0.4 <= tau1 <= 0.5 <= tau2 <= 0.6");
  }
}

ModelDiagnostics& diagnostics() {
  static ModelDiagnostics d;
  return d;
}

double preference_probability(const ProbabilityModelKind& model, double f1, double f2) {
  switch (model.variant) {
    case ProbabilityModel::kLinear:
      return 0.5 + (f1 - f2);
    case ProbabilityModel::kBtl: {
      const double s = f1 + f2;
      if (s == 0.0) {
        diagnostics().btl_degenerate.fetch_add(1, std::memory_order_relaxed);
        return 0.5;
      }
      return f1 / s;
    }
    case ProbabilityModel::kBtlLogistic:
      if (!(model.gamma > 0)) throw ConfigError("gamma must be positive");
      return sigmoid((f1 - f2) / model.gamma);
  }
  return 0.5;
}

double predict_outcome(double p, const ThresholdPair& t) {
  if (p > t.tau2) return 1.0;
  if (p < t.tau1) return 0.0;
  return 0.5;
}

double three_way_accuracy(const std::vector<ValidationPoint>& points, const ThresholdPair& t) {
  if (points.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& v : points) hit += predict_outcome(v.probability, t) == v.label ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(points.size());
}

ThresholdCalibration calibrate_thresholds(const std::vector<ValidationPoint>& validation) {
  if (validation.empty()) throw DegenerateInputError("empty validation set");
  for (const auto& v : validation) {
    if (!is_valid_outcome_value(v.label)) throw ValidationError("label must be 0, 0.5 or 1");
  }
  // Accuracy splits into a tau1 term and a tau2 term because tau1 <= 0.5 <= tau2:
  //   #loss(p < tau1) - #tie(p < tau1) + #win(p > tau2) - #tie(p > tau2) + #tie.
  constexpr int kSteps = 101;
  std::vector<long long> low(kSteps, 0), high(kSteps, 0);
  long long ties = 0;
  for (const auto& v : validation) {
    if (v.label == 0.5) ++ties;
  }
  for (int a = 0; a < kSteps; ++a) {
    const double tau1 = (400 + a) / 1000.0;
    const double tau2 = (500 + a) / 1000.0;
    for (const auto& v : validation) {
      if (v.probability < tau1) low[a] += v.label == 0.0 ? 1 : (v.label == 0.5 ? -1 : 0);
      if (v.probability > tau2) high[a] += v.label == 1.0 ? 1 : (v.label == 0.5 ? -1 : 0);
    }
  }
  long long best = std::numeric_limits<long long>::min();
  int best_a = 0, best_b = 0;
  for (int a = 0; a < kSteps; ++a) {
    for (int b = 0; b < kSteps; ++b) {
      const long long score = low[a] + high[b];
      const int width = (100 + b) - a;
      const int best_width = (100 + best_b) - best_a;
      if (score > best || (score == best && (width < best_width ||
                                             (width == best_width && a < best_a)))) {
        best = score;
        best_a = a;
        best_b = b;
      }
    }
  }
  ThresholdCalibration out;
  out.thresholds = {(400 + best_a) / 1000.0, (500 + best_b) / 1000.0};
  out.accuracy = static_cast<double>(best + ties) / static_cast<double>(validation.size());
  return out;
}

double logistic_cross_entropy(const std::vector<ScoredPair>& validation, double gamma) {
  if (validation.empty()) return 0.0;
  constexpr double kEps = 1e-12;
  double total = 0.0;
  for (const auto& v : validation) {
    const double p = std::clamp(sigmoid((v.score1 - v.score2) / gamma), kEps, 1.0 - kEps);
    total -= v.label * std::log(p) + (1.0 - v.label) * std::log(1.0 - p);
  }
  return total / static_cast<double>(validation.size());
}

ScorePreprocessor fit_preprocessor(ProbabilityModel variant,
                                   const std::vector<ScoredPair>& validation,
                                   const FitOptions& options) {
  if (validation.empty()) throw DegenerateInputError("empty validation set");
  ScorePreprocessor prep;
  prep.variant = variant;
  switch (variant) {
    case ProbabilityModel::kLinear: {
      double delta = 0.0;
      for (const auto& v : validation) delta = std::max(delta, std::abs(v.score1 - v.score2));
      prep.delta = delta;
      prep.informative = delta > 0.0;
      break;
    }
    case ProbabilityModel::kBtl: {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& v : validation) {
        lo = std::min({lo, v.score1, v.score2});
        hi = std::max({hi, v.score1, v.score2});
      }
      prep.btl_shift = options.btl_shift;
      prep.shift = options.btl_shift == BtlShift::kMinToZero ? lo : hi;
      prep.informative = hi > lo;
      break;
    }
    case ProbabilityModel::kBtlLogistic: {
      if (!(options.gamma_step > 0) || options.gamma_min <= 0 ||
          options.gamma_max < options.gamma_min) {
        throw ConfigError("invalid gamma grid");
      }
      const int steps =
          static_cast<int>(std::floor((options.gamma_max - options.gamma_min) / options.gamma_step +
                                      1e-9));
      double best_gamma = options.gamma_min;
      double best_ce = std::numeric_limits<double>::infinity();
      for (int s = 0; s <= steps; ++s) {
        const double g = options.gamma_min + s * options.gamma_step;
        const double ce = logistic_cross_entropy(validation, g);
        if (ce < best_ce) {
          best_ce = ce;
          best_gamma = g;
        }
      }
      prep.gamma = best_gamma;
      bool any = false;
      for (const auto& v : validation) any = any || v.score1 != v.score2;
      prep.informative = any;
      break;
    }
  }
  return prep;
}

PairwiseModel::PairwiseModel(ScorePreprocessor prep, ThresholdPair thresholds)
    : prep_(prep), thresholds_(thresholds) {
  validate_thresholds(thresholds_);
}

ProbabilityModelKind PairwiseModel::kind() const {
  ProbabilityModelKind k;
  k.variant = prep_.variant;
  if (prep_.variant == ProbabilityModel::kBtlLogistic) k.gamma = prep_.gamma;
  return k;
}

double PairwiseModel::probability(double raw1, double raw2) const {
  if (!prep_.informative) return 0.5;
  double p = 0.5;
  switch (prep_.variant) {
    case ProbabilityModel::kLinear:
    case ProbabilityModel::kBtl:
      p = preference_probability(kind(), prep_.apply(raw1), prep_.apply(raw2));
      break;
    case ProbabilityModel::kBtlLogistic:
      p = preference_probability(kind(), raw1, raw2);
      break;
  }
  if (p < 0.0 || p > 1.0) {
    diagnostics().linear_clamped.fetch_add(1, std::memory_order_relaxed);
    p = std::clamp(p, 0.0, 1.0);
  }
  return p;
}

nlohmann::json PairwiseModel::to_json() const {
  nlohmann::json constants;
  switch (prep_.variant) {
    case ProbabilityModel::kLinear: constants["delta"] = prep_.delta; break;
    case ProbabilityModel::kBtl:
      constants["shift"] = prep_.shift;
      constants["btl_shift"] = btl_shift_name(prep_.btl_shift);
      break;
    case ProbabilityModel::kBtlLogistic: constants["gamma"] = prep_.gamma; break;
  }
  constants["informative"] = prep_.informative;
  return {{"variant", probability_model_name(prep_.variant)},
          {"constants", constants},
          {"tau1", thresholds_.tau1},
          {"tau2", thresholds_.tau2}};
}

PairwiseModel PairwiseModel::from_json(const nlohmann::json& j) {
  ScorePreprocessor prep;
  prep.variant = parse_probability_model(j.at("variant").get<std::string>());
  const auto& c = j.at("constants");
  prep.informative = c.value("informative", true);
  switch (prep.variant) {
    case ProbabilityModel::kLinear: prep.delta = c.at("delta").get<double>(); break;
    case ProbabilityModel::kBtl:
      prep.shift = c.at("shift").get<double>();
      prep.btl_shift = parse_btl_shift(c.value("btl_shift", std::string("min_to_zero")));
      break;
    case ProbabilityModel::kBtlLogistic:
      prep.gamma = c.at("gamma").get<double>();
      if (!(prep.gamma >= 0.005 - 1e-12 && prep.gamma <= 1.0 + 1e-12)) {
        throw ConfigError("gamma must lie in [0.005, 1]");
      }
      break;
  }
  return PairwiseModel(prep, {j.at("tau1").get<double>(), j.at("tau2").get<double>()});
}

CalibrationRecord calibrate(std::string metric, ProbabilityModel variant,
                            const std::vector<ScoredPair>& validation,
                            const FitOptions& options) {
  const ScorePreprocessor prep = fit_preprocessor(variant, validation, options);
  const PairwiseModel provisional(prep, {0.5, 0.5});
  std::vector<ValidationPoint> points;
  points.reserve(validation.size());
  for (const auto& v : validation) {
    points.push_back({provisional.probability(v.score1, v.score2), v.label});
  }
  const ThresholdCalibration cal = calibrate_thresholds(points);
  return {std::move(metric), PairwiseModel(prep, cal.thresholds), cal.accuracy};
}

void write_calibration(std::ostream& out, const CalibrationRecord& record) {
  nlohmann::json j = record.model.to_json();
  j["metric"] = record.metric;
  j["validation_accuracy"] = record.validation_accuracy;
  out << j.dump() << '\n';
}

std::vector<CalibrationRecord> read_calibrations(std::istream& in) {
  std::vector<CalibrationRecord> out;
  jsonl::for_each(in, [&](const jsonl::Json& rec, std::size_t line) {
    jsonl::check_keys(rec, {"metric", "variant", "constants", "tau1", "tau2"},
                      {"validation_accuracy"}, line);
    CalibrationRecord r;
    r.metric = jsonl::get_string(rec, "metric", line);
    try {
      r.model = PairwiseModel::from_json(rec);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(e.what(), line);
    } catch (const ConfigError& e) {
      throw ValidationError(e.what(), line);
    }
    r.validation_accuracy = rec.value("validation_accuracy", 0.0);
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace activeeval
