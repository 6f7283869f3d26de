#include <algorithm>

#include "variants.hpp"

namespace activeeval::detail {

Dts::Dts(AlgorithmSpec spec, int k, std::uint64_t seed, bool plus_plus)
    : Learner(std::move(spec), k, seed), plus_plus_(plus_plus) {
  alpha_ = this->spec().get("alpha", 0.51);
}

Pair Dts::do_select() {
  const int n = k();
  const auto nn = static_cast<std::size_t>(n);

  // Upper Copeland scores restrict the first candidate.
  std::vector<double> c_up(nn, 0.0);
  for (SystemId i = 0; i < n; ++i) {
    for (SystemId j = 0; j < n; ++j) {
      if (i != j && upper(i, j, alpha_) > 0.5) c_up[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  const double best_up = *std::max_element(c_up.begin(), c_up.end());
  std::vector<bool> in_top(nn);
  for (std::size_t i = 0; i < nn; ++i) in_top[i] = c_up[i] == best_up;

  // First Thompson sample: sampled Copeland score within the candidate set.
  std::vector<double> theta(nn * nn, 0.5);
  for (SystemId i = 0; i < n; ++i) {
    for (SystemId j = i + 1; j < n; ++j) {
      const double t = sample_beta(rng(), counts().wins(i, j) + 1.0, counts().wins(j, i) + 1.0);
      theta[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)] = t;
      theta[static_cast<std::size_t>(j) * nn + static_cast<std::size_t>(i)] = 1.0 - t;
    }
  }
  std::vector<double> sampled(nn, 0.0);
  std::vector<double> mass(nn, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < nn; ++j) {
      if (i == j) continue;
      sampled[i] += theta[i * nn + j] > 0.5 ? 1.0 : 0.0;
      mass[i] += theta[i * nn + j];
    }
  }
  SystemId first;
  if (plus_plus_) {
    // Ties on the sampled Copeland score go to the larger total sampled preference.
    double best = -1.0;
    for (std::size_t i = 0; i < nn; ++i) {
      if (in_top[i]) best = std::max(best, sampled[i]);
    }
    std::vector<bool> tied(nn);
    for (std::size_t i = 0; i < nn; ++i) tied[i] = in_top[i] && sampled[i] == best;
    first = static_cast<SystemId>(argmax_random(mass, tied));
  } else {
    first = static_cast<SystemId>(argmax_random(sampled, in_top));
  }

  // Second Thompson sample: strongest plausible challenger of the first.
  std::vector<double> theta2(nn, 0.0);
  std::vector<bool> allowed(nn, false);
  bool any = false;
  for (SystemId i = 0; i < n; ++i) {
    if (i == first) continue;
    const auto iu = static_cast<std::size_t>(i);
    theta2[iu] = sample_beta(rng(), counts().wins(i, first) + 1.0, counts().wins(first, i) + 1.0);
    allowed[iu] = lower(i, first, alpha_) <= 0.5;
    any = any || allowed[iu];
  }
  if (!any) {
    for (SystemId i = 0; i < n; ++i) allowed[static_cast<std::size_t>(i)] = i != first;
  }
  return {first, static_cast<SystemId>(argmax_random(theta2, allowed))};
}

}  // namespace activeeval::detail
