#include <cmath>
#include <limits>

#include "variants.hpp"

namespace activeeval::detail {

BeatTheMean::BeatTheMean(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {
  gamma_ = this->spec().get("gamma", 1.0);
  log_inv_delta_ = std::log(2.0 * this->spec().get("horizon", 1e6) * k);
  active_.assign(static_cast<std::size_t>(k), true);
  w_.assign(static_cast<std::size_t>(k * k), 0.0);
  n_.assign(static_cast<std::size_t>(k * k), 0);
}

std::vector<SystemId> BeatTheMean::active_set() const {
  std::vector<SystemId> out;
  for (SystemId i = 0; i < k(); ++i) {
    if (active_[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

// Comparisons against eliminated systems drop out of the totals.
double BeatTheMean::total_wins(SystemId b) const {
  double s = 0.0;
  for (SystemId j = 0; j < k(); ++j) {
    if (active_[static_cast<std::size_t>(j)]) s += w_[static_cast<std::size_t>(b * k() + j)];
  }
  return s;
}

std::int64_t BeatTheMean::total_n(SystemId b) const {
  std::int64_t s = 0;
  for (SystemId j = 0; j < k(); ++j) {
    if (active_[static_cast<std::size_t>(j)]) s += n_[static_cast<std::size_t>(b * k() + j)];
  }
  return s;
}

Pair BeatTheMean::do_select() {
  const auto act = active_set();
  std::vector<double> score(act.size());
  for (std::size_t i = 0; i < act.size(); ++i) score[i] = -static_cast<double>(total_n(act[i]));
  const SystemId b = act[argmax_random(score)];
  std::vector<SystemId> others;
  for (SystemId s : act) {
    if (s != b) others.push_back(s);
  }
  return {b, others[uniform_index(rng(), others.size())]};
}

void BeatTheMean::on_update(const ComparisonOutcome& o) {
  const auto a = static_cast<std::size_t>(o.pair.first);
  const auto c = static_cast<std::size_t>(o.pair.second);
  if (!active_[a] || !active_[c]) return;
  w_[a * static_cast<std::size_t>(k()) + c] += o.value;
  n_[a * static_cast<std::size_t>(k()) + c] += 1;

  const auto act = active_set();
  std::int64_t n_star = std::numeric_limits<std::int64_t>::max();
  double p_min = 2.0, p_max = -1.0;
  SystemId worst = act.front();
  for (SystemId b : act) {
    const std::int64_t n = total_n(b);
    n_star = std::min(n_star, n);
    if (n == 0) continue;
    const double p = total_wins(b) / static_cast<double>(n);
    if (p < p_min) {
      p_min = p;
      worst = b;
    }
    p_max = std::max(p_max, p);
  }
  if (n_star == 0) return;
  const double c_star =
      3.0 * gamma_ * gamma_ * std::sqrt(log_inv_delta_ / static_cast<double>(n_star));
  if (p_min + c_star <= p_max - c_star) {
    active_[static_cast<std::size_t>(worst)] = false;
    const auto left = active_set();
    if (left.size() == 1) declare(left.front());
  }
}

}  // namespace activeeval::detail
