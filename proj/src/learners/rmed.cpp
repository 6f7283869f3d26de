#include <cmath>

#include "variants.hpp"

namespace activeeval::detail {

namespace {

// KL(p || 1/2) for Bernoulli distributions, with 0 log 0 = 0.
double kl_half(double p) {
  double v = 0.0;
  if (p > 0) v += p * std::log(2.0 * p);
  if (p < 1) v += (1.0 - p) * std::log(2.0 * (1.0 - p));
  return v;
}

}  // namespace

Rmed::Rmed(AlgorithmSpec spec, int k, std::uint64_t seed) : Learner(std::move(spec), k, seed) {
  f_k_ = this->spec().get("f_coef", 0.3) * std::pow(static_cast<double>(k),
                                                    this->spec().get("f_exp", 1.01));
  const auto kk = static_cast<std::size_t>(k);
  empirical_divergence_.assign(kk, 0.0);
  term_.assign(kk * kk, 0.0);
  in_remaining_.assign(kk, false);
  in_next_.assign(kk, false);
}

void Rmed::refresh_pair(SystemId i, SystemId j) {
  const auto n = static_cast<std::size_t>(k());
  for (const auto& [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
    const double mu = counts().estimate(a, b);
    const double fresh =
        mu <= 0.5 ? static_cast<double>(counts().trials(a, b)) * kl_half(mu) : 0.0;
    auto& slot = term_[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];
    empirical_divergence_[static_cast<std::size_t>(a)] += fresh - slot;
    slot = fresh;
  }
}

void Rmed::on_update(const ComparisonOutcome& o) { refresh_pair(o.pair.first, o.pair.second); }

SystemId Rmed::leader() const {
  SystemId best = 0;
  for (SystemId i = 1; i < k(); ++i) {
    if (empirical_divergence_[static_cast<std::size_t>(i)] <
        empirical_divergence_[static_cast<std::size_t>(best)]) {
      best = i;
    }
  }
  return best;
}

Pair Rmed::do_select() {
  const int n = k();
  if (init_next_ < num_pairs(n)) {
    const Pair p = pair_at(n, init_next_++);
    if (init_next_ == num_pairs(n)) {
      loop_current_.clear();
      for (SystemId i = 0; i < n; ++i) {
        loop_current_.push_back(i);
        in_remaining_[static_cast<std::size_t>(i)] = true;
      }
      loop_pos_ = 0;
    }
    return p;
  }

  const SystemId star = leader();
  if (pending_bookkeeping_) {
    const double bound = std::log(time_index()) + f_k_;
    const double base = empirical_divergence_[static_cast<std::size_t>(star)];
    for (SystemId j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (in_remaining_[ju] || in_next_[ju]) continue;
      if (empirical_divergence_[ju] - base <= bound) in_next_[ju] = true;
    }
    pending_bookkeeping_ = false;
  }
  if (loop_pos_ >= loop_current_.size()) {
    loop_current_.clear();
    for (SystemId j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (in_next_[ju]) loop_current_.push_back(j);
      in_remaining_[ju] = in_next_[ju];
      in_next_[ju] = false;
    }
    if (loop_current_.empty()) {
      loop_current_.push_back(star);
      in_remaining_[static_cast<std::size_t>(star)] = true;
    }
    loop_pos_ = 0;
  }

  const SystemId l = loop_current_[loop_pos_++];
  in_remaining_[static_cast<std::size_t>(l)] = false;
  pending_bookkeeping_ = true;

  SystemId m;
  if (star != l && counts().estimate(l, star) <= 0.5) {
    m = star;
  } else {
    m = l == 0 ? 1 : 0;
    for (SystemId j = 0; j < n; ++j) {
      if (j != l && counts().estimate(l, j) < counts().estimate(l, m)) m = j;
    }
  }
  return {l, m};
}

}  // namespace activeeval::detail
