#pragma once

// Brute-force reference computations written without the library's helpers.
// Tests compare library output against these on random fixtures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

// k x k row-major matrix of p_ij.
inline std::vector<double> copeland(const std::vector<double>& p, int k) {
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    int wins = 0;
    for (int j = 0; j < k; ++j) {
      if (i != j && p[static_cast<std::size_t>(i * k + j)] > 0.5) ++wins;
    }
    out[static_cast<std::size_t>(i)] = static_cast<double>(wins) / (k - 1);
  }
  return out;
}

// correct[s][c]: seed s recommends the truth at checkpoint c. Scans every
// checkpoint; the answer is the checkpoint after the last failing one.
inline std::optional<long long> complexity(const std::vector<std::vector<bool>>& correct,
                                           long long stride, double delta) {
  const std::size_t seeds = correct.size();
  const std::size_t points = correct.front().size();
  long long last_fail = -1;
  for (std::size_t c = 0; c < points; ++c) {
    std::size_t ok = 0;
    for (std::size_t s = 0; s < seeds; ++s) ok += correct[s][c] ? 1 : 0;
    // ok / seeds > 1 - delta, compared in integers where possible
    const bool pass = static_cast<double>(ok) > (1.0 - delta) * static_cast<double>(seeds) + 1e-9;
    if (!pass) last_fail = static_cast<long long>(c);
  }
  if (last_fail == static_cast<long long>(points) - 1) return std::nullopt;
  return (last_fail + 1) * stride;
}

inline double entropy_bits(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
}

inline double entropy_nats(double p) { return entropy_bits(p) * std::log(2.0); }

inline double bald_nats(const std::vector<double>& s) {
  double mean = 0.0, mean_h = 0.0;
  for (double p : s) {
    mean += p;
    mean_h += entropy_nats(p);
  }
  mean /= static_cast<double>(s.size());
  mean_h /= static_cast<double>(s.size());
  return std::max(0.0, entropy_nats(mean) - mean_h);
}

// Score samples per (system, example): samples[s][e][l].
using Samples = std::vector<std::vector<std::vector<double>>>;

struct Elimination {
  std::vector<double> upper;  // k x k
  std::vector<double> copeland;
  std::vector<bool> survived;
};

// Linear probability model on raw scores with gap normaliser delta:
// p = clamp(0.5 + (a - b) / (2 delta)).
inline Elimination ucb_linear(const Samples& x, double delta, double alpha, double tau) {
  const int k = static_cast<int>(x.size());
  const std::size_t n = x[0].size();
  const std::size_t L = x[0][0].size();
  Elimination out;
  out.upper.assign(static_cast<std::size_t>(k * k), 0.5);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double sum_mean = 0.0, sum_var = 0.0;
      for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> ps;
        for (std::size_t l = 0; l < L; ++l) {
          double p = 0.5 + (x[i][e][l] - x[j][e][l]) / (2.0 * delta);
          ps.push_back(std::min(1.0, std::max(0.0, p)));
        }
        double m = 0.0;
        for (double p : ps) m += p;
        m /= static_cast<double>(L);
        double v = 0.0;
        for (double p : ps) v += (p - m) * (p - m);
        v /= static_cast<double>(L);
        sum_mean += m;
        sum_var += v;
      }
      const double p_hat = sum_mean / static_cast<double>(n);
      const double sigma = std::sqrt(sum_var) / static_cast<double>(n);
      out.upper[static_cast<std::size_t>(i * k + j)] = p_hat + alpha * sigma;
    }
  }
  int best = 0;
  std::vector<int> wins(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i != j && out.upper[static_cast<std::size_t>(i * k + j)] > 0.5) ++wins[i];
    }
    best = std::max(best, wins[i]);
  }
  bool any = false;
  for (int i = 0; i < k; ++i) {
    out.copeland.push_back(static_cast<double>(wins[i]) / (k - 1));
    const bool keep = wins[i] >= tau * (k - 1) - 1e-9;
    out.survived.push_back(keep);
    any = any || keep;
  }
  if (!any) {
    for (int i = 0; i < k; ++i) out.survived[i] = wins[i] == best;
  }
  return out;
}

}  // namespace oracle
