#pragma once

// Conversion of direct-assessment metric scores into pairwise preference
// probabilities and three-way (win / tie / loss) predicted outcomes.

#include <atomic>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace activeeval {

enum class ProbabilityModel { kLinear, kBtl, kBtlLogistic };

std::string_view probability_model_name(ProbabilityModel m);
ProbabilityModel parse_probability_model(std::string_view name);

struct ProbabilityModelKind {
  ProbabilityModel variant = ProbabilityModel::kLinear;
  // Temperature, BTL-logistic only. Must lie in [0.005, 1].
  double gamma = 1.0;
};

// How BTL scores are shifted. kMinToZero makes validation scores
// non-negative; kSubtractMax is the literal f - max(f) form, which yields
// non-positive scores.
enum class BtlShift { kMinToZero, kSubtractMax };

struct ScorePreprocessor {
  ProbabilityModel variant = ProbabilityModel::kLinear;
  double delta = 0.0;  // Linear: max |f1 - f2| over validation pairs
  double shift = 0.0;  // BTL: subtracted from every raw score
  BtlShift btl_shift = BtlShift::kMinToZero;
  double gamma = 1.0;  // BTL-logistic temperature
  bool informative = true;

  // Maps a raw score to the model's input scale.
  double apply(double raw) const;
};

struct ThresholdPair {
  double tau1 = 0.5;
  double tau2 = 0.5;
};

void validate_thresholds(const ThresholdPair& t);

// Process-wide counters for the two recoverable input problems.
struct ModelDiagnostics {
  std::atomic<long long> linear_clamped{0};
  std::atomic<long long> btl_degenerate{0};
};
ModelDiagnostics& diagnostics();

// p(Y1 > Y2) from preprocessed scores. Linear is not clamped here; BTL with
// f1 = f2 = 0 returns 0.5 and bumps diagnostics().btl_degenerate.
double preference_probability(const ProbabilityModelKind& model, double f1, double f2);

// 1 if p > tau2, 0 if p < tau1, else 0.5.
double predict_outcome(double p, const ThresholdPair& t);

struct ValidationPoint {
  double probability;
  double label;  // human outcome in {0, 0.5, 1}
};

struct ThresholdCalibration {
  ThresholdPair thresholds;
  double accuracy = 0.0;
};

// Exhaustive grid tau1 in [0.4, 0.5], tau2 in [0.5, 0.6], step 0.001. Ties go
// to the narrowest band, then to the smallest tau1. Throws on empty input.
ThresholdCalibration calibrate_thresholds(const std::vector<ValidationPoint>& validation);

double three_way_accuracy(const std::vector<ValidationPoint>& points, const ThresholdPair& t);

struct ScoredPair {
  double score1;  // raw metric score of the first text
  double score2;
  double label;  // human outcome, 1 = first preferred
};

struct FitOptions {
  BtlShift btl_shift = BtlShift::kMinToZero;
  double gamma_min = 0.005;
  double gamma_max = 1.0;
  double gamma_step = 0.005;
};

ScorePreprocessor fit_preprocessor(ProbabilityModel variant,
                                   const std::vector<ScoredPair>& validation,
                                   const FitOptions& options = {});

// Mean binary cross-entropy of sigmoid((f1 - f2) / gamma) against the labels.
double logistic_cross_entropy(const std::vector<ScoredPair>& validation, double gamma);

// A fitted model: preprocessing, probability model and thresholds.
class PairwiseModel {
 public:
  PairwiseModel() = default;
  PairwiseModel(ScorePreprocessor prep, ThresholdPair thresholds);

  // Linear outputs outside [0, 1] are clamped and counted.
  double probability(double raw1, double raw2) const;
  double outcome(double probability) const { return predict_outcome(probability, thresholds_); }

  const ScorePreprocessor& preprocessor() const { return prep_; }
  const ThresholdPair& thresholds() const { return thresholds_; }
  ProbabilityModelKind kind() const;

  nlohmann::json to_json() const;
  static PairwiseModel from_json(const nlohmann::json& j);

 private:
  ScorePreprocessor prep_;
  ThresholdPair thresholds_;
};

// Fits the preprocessor, then the thresholds, on the same validation set.
struct CalibrationRecord {
  std::string metric;
  PairwiseModel model;
  double validation_accuracy = 0.0;
};

CalibrationRecord calibrate(std::string metric, ProbabilityModel variant,
                            const std::vector<ScoredPair>& validation,
                            const FitOptions& options = {});

// One JSON object per line: metric, variant, constants, tau1, tau2,
// validation_accuracy.
void write_calibration(std::ostream& out, const CalibrationRecord& record);
std::vector<CalibrationRecord> read_calibrations(std::istream& in);

}  // namespace activeeval
