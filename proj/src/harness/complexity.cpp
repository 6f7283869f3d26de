#include <algorithm>
#include <cmath>
#include <set>

#include "activeeval/errors.hpp"
#include "activeeval/harness.hpp"

namespace activeeval {

void ComplexityConfig::validate() const {
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  if (!(delta_acc > 0 && delta_acc < 1)) throw ConfigError("delta_acc must lie in (0, 1)");
  if (checkpoint_stride < 1) throw ConfigError("checkpoint_stride must be >= 1");
  if (max_budget < 0) throw ConfigError("max_budget must be >= 0");
}

nlohmann::json RunTrace::to_json() const {
  std::vector<long long> humans;
  std::vector<int> recs;
  humans.reserve(checkpoints.size());
  recs.reserve(checkpoints.size());
  for (const auto& c : checkpoints) {
    humans.push_back(c.humans);
    recs.push_back(c.recommendation);
  }
  return {{"seed", seed},
          {"humans", humans},
          {"recommendations", recs},
          {"terminal", terminal},
          {"human_annotations", human_annotations},
          {"model_annotations", model_annotations},
          {"steps", steps},
          {"terminated", terminated}};
}

RunTrace RunTrace::from_json(const nlohmann::json& j) {
  RunTrace t;
  t.seed = j.at("seed").get<std::uint64_t>();
  const auto humans = j.at("humans").get<std::vector<long long>>();
  const auto recs = j.at("recommendations").get<std::vector<int>>();
  if (humans.size() != recs.size()) throw ValidationError("humans and recommendations differ in length");
  for (std::size_t i = 0; i < humans.size(); ++i) t.checkpoints.push_back({humans[i], recs[i]});
  t.terminal = j.at("terminal").get<int>();
  t.human_annotations = j.at("human_annotations").get<long long>();
  t.model_annotations = j.at("model_annotations").get<long long>();
  t.steps = j.at("steps").get<long long>();
  t.terminated = j.at("terminated").get<bool>();
  return t;
}

namespace {

void check_grid(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw DegenerateInputError("no traces");
  const auto& ref = traces.front().checkpoints;
  for (const auto& t : traces) {
    bool same = t.checkpoints.size() == ref.size();
    for (std::size_t c = 0; same && c < ref.size(); ++c) {
      same = t.checkpoints[c].humans == ref[c].humans;
    }
    if (!same) throw ConfigError("traces do not share a checkpoint grid");
  }
}

std::vector<std::size_t> correct_counts(const std::vector<RunTrace>& traces, SystemId truth) {
  std::vector<std::size_t> correct(traces.front().checkpoints.size(), 0);
  for (const auto& t : traces) {
    for (std::size_t c = 0; c < correct.size(); ++c) {
      if (t.checkpoints[c].recommendation == truth) ++correct[c];
    }
  }
  return correct;
}

}  // namespace

ComplexityResult annotation_complexity(const std::vector<RunTrace>& traces, SystemId truth,
                                       const ComplexityConfig& cfg) {
  cfg.validate();
  check_grid(traces);
  const auto correct = correct_counts(traces, truth);
  const auto& grid = traces.front().checkpoints;
  const double n = static_cast<double>(traces.size());
  // Strict inequality; the epsilon keeps e.g. 190/200 at delta 0.05 below the bar.
  const double bar = (1.0 - cfg.delta_acc) * n + 1e-9;
  auto ok = [&](std::size_t c) {
    return static_cast<double>(correct[c]) > bar && grid[c].humans <= cfg.max_budget;
  };

  ComplexityResult r;
  if (!correct.empty()) r.final_accuracy = static_cast<double>(correct.back()) / n;
  for (std::size_t c = 0; c < correct.size(); ++c) {
    if (ok(c)) {
      r.first_crossing = grid[c].humans;
      break;
    }
  }
  std::size_t c = correct.size();
  while (c > 0 && ok(c - 1)) --c;
  if (c < correct.size()) r.complexity = grid[c].humans;
  return r;
}

std::vector<CurvePoint> accuracy_curve(const std::vector<RunTrace>& traces, SystemId truth) {
  check_grid(traces);
  const auto correct = correct_counts(traces, truth);
  std::vector<CurvePoint> out;
  out.reserve(correct.size());
  for (std::size_t c = 0; c < correct.size(); ++c) {
    out.push_back({traces.front().checkpoints[c].humans,
                   static_cast<double>(correct[c]) / static_cast<double>(traces.size())});
  }
  return out;
}

namespace {

LeastSquaresFit fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LeastSquaresFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    f.rss += e * e;
  }
  return f;
}

}  // namespace

ScalingReport k_scaling(const std::vector<ScalingPoint>& points) {
  std::set<int> distinct;
  for (const auto& p : points) distinct.insert(p.k);
  if (distinct.size() < 4) throw ConfigError("k-scaling needs at least 4 distinct k values");
  ScalingReport r;
  r.points = points;
  std::vector<double> k1, k2, y;
  for (const auto& p : points) {
    if (!p.complexity) {
      r.excluded.push_back(p.k);
      continue;
    }
    k1.push_back(p.k);
    k2.push_back(static_cast<double>(p.k) * p.k);
    y.push_back(*p.complexity);
  }
  if (y.size() < 2) throw DegenerateInputError("fewer than 2 identified points to fit");
  r.linear = fit(k1, y);
  r.quadratic = fit(k2, y);
  r.preferred = r.quadratic.rss < r.linear.rss ? "quadratic" : "linear";
  return r;
}

}  // namespace activeeval
