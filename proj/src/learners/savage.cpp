#include <algorithm>
#include <cmath>
#include <limits>

#include "variants.hpp"

namespace activeeval::detail {

Savage::Savage(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {
  delta_ = this->spec().get("delta", 0.05);
  pair_active_.assign(num_pairs(k), true);
  resolved_.assign(num_pairs(k), 0);
}

double Savage::radius(std::int64_t n) const {
  const double nn = static_cast<double>(n);
  const double pairs = static_cast<double>(num_pairs(k()));
  return std::sqrt(std::log(4.0 * pairs * nn * nn / delta_) / (2.0 * nn));
}

// Systems whose Copeland upper bound still reaches the best lower bound.
std::vector<SystemId> Savage::active_set() const {
  if (terminated()) return {recommend()};
  std::vector<int> lo, hi;
  bounds(lo, hi);
  const int max_lo = *std::max_element(lo.begin(), lo.end());
  std::vector<SystemId> out;
  for (SystemId i = 0; i < k(); ++i) {
    if (hi[static_cast<std::size_t>(i)] >= max_lo) out.push_back(i);
  }
  return out;
}

void Savage::bounds(std::vector<int>& lo, std::vector<int>& hi) const {
  const int n = k();
  lo.assign(static_cast<std::size_t>(n), 0);
  hi.assign(static_cast<std::size_t>(n), n - 1);
  for (std::size_t p = 0; p < resolved_.size(); ++p) {
    if (resolved_[p] == 0) continue;
    const Pair q = pair_at(n, p);
    const SystemId w = resolved_[p] > 0 ? q.first : q.second;
    const SystemId l = resolved_[p] > 0 ? q.second : q.first;
    ++lo[static_cast<std::size_t>(w)];
    --hi[static_cast<std::size_t>(l)];
  }
}

Pair Savage::do_select() {
  std::vector<double> score(pair_active_.size());
  for (std::size_t p = 0; p < pair_active_.size(); ++p) {
    const Pair q = pair_at(k(), p);
    score[p] = -static_cast<double>(counts().trials(q.first, q.second));
  }
  return pair_at(k(), argmax_random(score, pair_active_));
}

void Savage::on_update(const ComparisonOutcome& o) {
  const std::size_t p = pair_index(k(), o.pair.first, o.pair.second);
  if (resolved_[p] == 0) {
    const Pair q = pair_at(k(), p);
    const auto n = counts().trials(q.first, q.second);
    const double gap = counts().estimate(q.first, q.second) - 0.5;
    if (std::abs(gap) > radius(n)) resolved_[p] = gap > 0 ? 1 : -1;
  }
  refresh();
}

void Savage::refresh() {
  const int n = k();
  std::vector<int> lo, hi;
  bounds(lo, hi);
  const int max_lo = *std::max_element(lo.begin(), lo.end());
  bool any_active = false;
  for (std::size_t p = 0; p < pair_active_.size(); ++p) {
    if (!pair_active_[p]) continue;
    const Pair q = pair_at(n, p);
    const bool useless = hi[static_cast<std::size_t>(q.first)] < max_lo &&
                         hi[static_cast<std::size_t>(q.second)] < max_lo;
    if (resolved_[p] != 0 || useless) pair_active_[p] = false;
    any_active = any_active || pair_active_[p];
  }
  for (SystemId i = 0; i < n; ++i) {
    int rival = std::numeric_limits<int>::min();
    for (SystemId j = 0; j < n; ++j) {
      if (j != i) rival = std::max(rival, hi[static_cast<std::size_t>(j)]);
    }
    if (lo[static_cast<std::size_t>(i)] > rival) {
      declare(i);
      return;
    }
  }
  if (!any_active) {
    declare(static_cast<SystemId>(std::max_element(lo.begin(), lo.end()) - lo.begin()));
  }
}

}  // namespace activeeval::detail
