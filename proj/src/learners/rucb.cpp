#include <algorithm>

#include "variants.hpp"

namespace activeeval::detail {

Rucb::Rucb(AlgorithmSpec spec, int k, std::uint64_t seed) : Learner(std::move(spec), k, seed) {
  alpha_ = this->spec().get("alpha", 0.51);
}

Pair Rucb::do_select() {
  const int n = k();
  std::vector<SystemId> candidates;
  for (SystemId c = 0; c < n; ++c) {
    bool ok = true;
    for (SystemId j = 0; j < n && ok; ++j) ok = upper(c, j, alpha_) >= 0.5;
    if (ok) candidates.push_back(c);
  }

  SystemId c;
  if (candidates.empty()) {
    best_.reset();
    c = static_cast<SystemId>(uniform_index(rng(), static_cast<std::size_t>(n)));
  } else {
    const bool best_is_candidate =
        best_ && std::find(candidates.begin(), candidates.end(), *best_) != candidates.end();
    if (!best_is_candidate) best_.reset();
    if (candidates.size() == 1) {
      best_ = candidates.front();
      c = candidates.front();
    } else if (best_ && bernoulli(rng(), 0.5)) {
      c = *best_;
    } else {
      std::vector<SystemId> rest;
      for (SystemId s : candidates) {
        if (!best_ || s != *best_) rest.push_back(s);
      }
      c = rest[uniform_index(rng(), rest.size())];
    }
  }

  std::vector<double> u(static_cast<std::size_t>(n));
  std::vector<bool> allowed(static_cast<std::size_t>(n), true);
  for (SystemId j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] = upper(j, c, alpha_);
  allowed[static_cast<std::size_t>(c)] = false;
  const auto d = static_cast<SystemId>(argmax_random(u, allowed));
  return {c, d};
}

}  // namespace activeeval::detail
