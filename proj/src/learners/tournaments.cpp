#include <algorithm>
#include <cmath>

#include "variants.hpp"

namespace activeeval::detail {

// ---- Bracket ---------------------------------------------------------------

Bracket::Bracket(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {
  for (SystemId i = 0; i < k; ++i) alive_.push_back(i);
}

void Bracket::start_round() {
  ++round_;
  std::vector<SystemId> order = alive_;
  std::shuffle(order.begin(), order.end(), rng());
  duels_.clear();
  advanced_.clear();
  for (std::size_t i = 0; i + 1 < order.size(); i += 2) duels_.push_back({order[i], order[i + 1]});
  if (order.size() % 2 == 1) advanced_.push_back(order.back());
  current_ = 0;
  duel_wins_ = 0.0;
  duel_n_ = 0;
  on_new_round();
}

Pair Bracket::do_select() {
  if (duels_.empty()) start_round();
  return duels_[current_];
}

void Bracket::on_update(const ComparisonOutcome& o) {
  if (current_ >= duels_.size()) return;
  const Pair d = duels_[current_];
  double v;
  if (o.pair == d) {
    v = o.value;
  } else if (o.pair == d.swapped()) {
    v = 1.0 - o.value;
  } else {
    return;  // late outcome from an already decided duel
  }
  duel_wins_ += v;
  duel_n_ += 1;
  const double n = static_cast<double>(duel_n_);
  if (duel_done(n, duel_wins_ / n)) finish_duel();
}

void Bracket::finish_duel() {
  const Pair d = duels_[current_];
  const double p = duel_wins_ / static_cast<double>(duel_n_);
  SystemId winner;
  if (p > 0.5) {
    winner = d.first;
  } else if (p < 0.5) {
    winner = d.second;
  } else {
    winner = bernoulli(rng(), 0.5) ? d.first : d.second;
  }
  advanced_.push_back(winner);
  ++current_;
  duel_wins_ = 0.0;
  duel_n_ = 0;
  if (current_ < duels_.size()) return;
  alive_ = advanced_;
  std::sort(alive_.begin(), alive_.end());
  if (alive_.size() == 1) {
    declare(alive_.front());
    return;
  }
  start_round();
}

// ---- Knockout --------------------------------------------------------------

Knockout::Knockout(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Bracket(std::move(spec), k, seed) {
  epsilon_ = this->spec().get("epsilon", 0.2);
  delta_ = this->spec().get("delta", 0.05);
  gamma_ = this->spec().get("gamma", 0.6);
}

void Knockout::on_new_round() {
  const double r = round();
  const double c = std::cbrt(2.0) - 1.0;
  eps_r_ = c * epsilon_ / (gamma_ * std::pow(2.0, r / 3.0));
  delta_r_ = delta_ / std::pow(2.0, r);
  m_r_ = static_cast<std::int64_t>(std::ceil(std::log(2.0 / delta_r_) / (2.0 * eps_r_ * eps_r_)));
}

bool Knockout::duel_done(double n, double p_hat) const {
  if (n >= static_cast<double>(m_r_)) return true;
  const double c_hat = std::sqrt(std::log(4.0 * n * n / delta_r_) / (2.0 * n));
  return std::abs(p_hat - 0.5) > c_hat - eps_r_;
}

// ---- SingleElimination -----------------------------------------------------

SingleElimination::SingleElimination(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Bracket(std::move(spec), k, seed) {
  m_ = static_cast<std::int64_t>(std::llround(this->spec().get("m", 500.0)));
}

bool SingleElimination::duel_done(double n, double) const {
  return n >= static_cast<double>(m_);
}

// ---- SequentialElimination -------------------------------------------------

SequentialElimination::SequentialElimination(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {
  const double eps = this->spec().get("epsilon", 0.1);
  const double delta = this->spec().get("delta", 0.05);
  m_ = static_cast<std::int64_t>(std::ceil(2.0 / (eps * eps) * std::log(2.0 * k / delta)));
  std::vector<SystemId> order;
  for (SystemId i = 0; i < k; ++i) order.push_back(i);
  std::shuffle(order.begin(), order.end(), rng());
  champion_ = order.front();
  queue_.assign(order.begin() + 1, order.end());
}

std::vector<SystemId> SequentialElimination::active_set() const {
  std::vector<SystemId> out(queue_.begin() + static_cast<std::ptrdiff_t>(next_), queue_.end());
  out.push_back(champion_);
  std::sort(out.begin(), out.end());
  return out;
}

Pair SequentialElimination::do_select() { return {queue_[next_], champion_}; }

void SequentialElimination::on_update(const ComparisonOutcome& o) {
  const Pair d{queue_[next_], champion_};
  double v;
  if (o.pair == d) {
    v = o.value;
  } else if (o.pair == d.swapped()) {
    v = 1.0 - o.value;
  } else {
    return;
  }
  champ_wins_ += 1.0 - v;
  duel_n_ += 1;
  if (duel_n_ < m_) return;
  const double challenger_rate = 1.0 - champ_wins_ / static_cast<double>(duel_n_);
  if (challenger_rate > 0.5) champion_ = d.first;
  ++next_;
  champ_wins_ = 0.0;
  duel_n_ = 0;
  if (next_ == queue_.size()) declare(champion_);
}

}  // namespace activeeval::detail
