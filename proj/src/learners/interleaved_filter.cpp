#include <algorithm>
#include <cmath>

#include "variants.hpp"

namespace activeeval::detail {

InterleavedFilter::InterleavedFilter(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {
  const double horizon = this->spec().get("horizon", 1e6);
  log_inv_delta_ = std::log(horizon * k * k);
  prune_ = this->spec().get("prune", 1.0) != 0.0;
  champion_ = static_cast<SystemId>(uniform_index(rng(), static_cast<std::size_t>(k)));
  for (SystemId i = 0; i < k; ++i) {
    if (i != champion_) remaining_.push_back(i);
  }
  reset_stats();
}

void InterleavedFilter::reset_stats() {
  wins_.assign(static_cast<std::size_t>(k()), 0.0);
  n_.assign(static_cast<std::size_t>(k()), 0);
  cursor_ = 0;
}

std::vector<SystemId> InterleavedFilter::active_set() const {
  std::vector<SystemId> out = remaining_;
  out.push_back(champion_);
  std::sort(out.begin(), out.end());
  return out;
}

Pair InterleavedFilter::do_select() {
  const SystemId b = remaining_[cursor_ % remaining_.size()];
  ++cursor_;
  return {champion_, b};
}

void InterleavedFilter::on_update(const ComparisonOutcome& o) {
  SystemId b;
  double v;
  if (o.pair.first == champion_) {
    b = o.pair.second;
    v = o.value;
  } else if (o.pair.second == champion_) {
    b = o.pair.first;
    v = 1.0 - o.value;
  } else {
    return;
  }
  if (std::find(remaining_.begin(), remaining_.end(), b) == remaining_.end()) return;
  const auto bi = static_cast<std::size_t>(b);
  wins_[bi] += v;
  n_[bi] += 1;
  const double n = static_cast<double>(n_[bi]);
  const double p = wins_[bi] / n;
  const double c = std::sqrt(log_inv_delta_ / n);
  if (p > 0.5 && p - c > 0.5) {
    remaining_.erase(std::find(remaining_.begin(), remaining_.end(), b));
  } else if (p < 0.5 && p + c < 0.5) {
    if (prune_) {
      std::vector<SystemId> kept;
      for (SystemId s : remaining_) {
        const auto si = static_cast<std::size_t>(s);
        const bool champion_ahead = n_[si] > 0 && wins_[si] / static_cast<double>(n_[si]) > 0.5;
        if (s != b && !champion_ahead) kept.push_back(s);
      }
      remaining_ = std::move(kept);
    } else {
      remaining_.erase(std::find(remaining_.begin(), remaining_.end(), b));
    }
    champion_ = b;
    reset_stats();
  }
  if (remaining_.empty()) declare(champion_);
}

}  // namespace activeeval::detail
