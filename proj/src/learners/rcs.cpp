#include "variants.hpp"

namespace activeeval::detail {

Rcs::Rcs(AlgorithmSpec spec, int k, std::uint64_t seed) : Learner(std::move(spec), k, seed) {
  alpha_ = this->spec().get("alpha", 0.501);
  champion_count_.assign(static_cast<std::size_t>(k), 0);
}

Pair Rcs::do_select() {
  const int n = k();
  const auto idx = [n](SystemId i, SystemId j) { return static_cast<std::size_t>(i * n + j); };
  std::vector<double> theta(static_cast<std::size_t>(n * n), 0.5);
  for (SystemId i = 0; i < n; ++i) {
    for (SystemId j = i + 1; j < n; ++j) {
      const double t = sample_beta(rng(), counts().wins(i, j) + 1.0, counts().wins(j, i) + 1.0);
      theta[idx(i, j)] = t;
      theta[idx(j, i)] = 1.0 - t;
    }
  }

  SystemId c = -1;
  for (SystemId i = 0; i < n && c < 0; ++i) {
    bool beats_all = true;
    for (SystemId j = 0; j < n && beats_all; ++j) beats_all = i == j || theta[idx(i, j)] > 0.5;
    if (beats_all) c = i;
  }
  if (c >= 0) {
    ++champion_count_[static_cast<std::size_t>(c)];
  } else {
    std::vector<double> b(champion_count_.begin(), champion_count_.end());
    c = static_cast<SystemId>(argmax_random(b));
  }

  std::vector<double> u(static_cast<std::size_t>(n));
  std::vector<bool> allowed(static_cast<std::size_t>(n), true);
  for (SystemId j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] = upper(j, c, alpha_);
  allowed[static_cast<std::size_t>(c)] = false;
  return {c, static_cast<SystemId>(argmax_random(u, allowed))};
}

}  // namespace activeeval::detail
