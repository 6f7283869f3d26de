#include <algorithm>
#include <cmath>

#include "variants.hpp"

namespace activeeval::detail {

PlackettLuce::PlackettLuce(AlgorithmSpec spec, int k, std::uint64_t seed)
    : Learner(std::move(spec), k, seed) {
  delta_ = this->spec().get("delta", 0.05);
  active_.assign(static_cast<std::size_t>(k), true);
}

std::vector<SystemId> PlackettLuce::active_set() const {
  std::vector<SystemId> out;
  for (SystemId i = 0; i < k(); ++i) {
    if (active_[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

void PlackettLuce::start_round() {
  auto items = active_set();
  std::shuffle(items.begin(), items.end(), rng());
  const auto n = static_cast<double>(items.size());
  round_budget_ = static_cast<std::int64_t>(n * std::ceil(std::log2(n)));
  round_used_ = 0;
  stack_.clear();
  stack_.push_back({std::move(items)});
  open_ = false;
}

void PlackettLuce::open_segment() {
  Segment seg = std::move(stack_.back());
  stack_.pop_back();
  const std::size_t p = uniform_index(rng(), seg.items.size());
  pivot_ = seg.items[p];
  members_.clear();
  for (std::size_t i = 0; i < seg.items.size(); ++i) {
    if (i != p) members_.push_back(seg.items[i]);
  }
  verdict_.assign(members_.size(), -1);
  issued_.assign(members_.size(), false);
  reissue_ = 0;
  open_ = true;
}

void PlackettLuce::close_segment() {
  Segment better, worse;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    (verdict_[i] == 1 ? better : worse).items.push_back(members_[i]);
  }
  // Worse half first so the better half is partitioned next.
  if (worse.items.size() >= 2) stack_.push_back(std::move(worse));
  if (better.items.size() >= 2) stack_.push_back(std::move(better));
  open_ = false;
}

Pair PlackettLuce::do_select() {
  for (;;) {
    if (!open_) {
      if (stack_.empty() || round_used_ >= round_budget_) start_round();
      open_segment();
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (!issued_[i]) {
        if (round_used_ >= round_budget_) break;
        issued_[i] = true;
        ++round_used_;
        return {pivot_, members_[i]};
      }
    }
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (issued_[i] && verdict_[i] < 0) pending.push_back(i);
    }
    if (!pending.empty()) {
      const std::size_t i = pending[reissue_++ % pending.size()];
      return {pivot_, members_[i]};
    }
    // Budget exhausted with nothing outstanding: abandon the round.
    open_ = false;
    stack_.clear();
  }
}

void PlackettLuce::on_update(const ComparisonOutcome& o) {
  if (open_) {
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (verdict_[i] >= 0 || !issued_[i]) continue;
      double pivot_value;
      if (o.pair == Pair{pivot_, members_[i]}) {
        pivot_value = o.value;
      } else if (o.pair == Pair{members_[i], pivot_}) {
        pivot_value = 1.0 - o.value;
      } else {
        continue;
      }
      if (pivot_value == 0.5) {
        verdict_[i] = bernoulli(rng(), 0.5) ? 1 : 0;
      } else {
        verdict_[i] = pivot_value < 0.5 ? 1 : 0;
      }
      break;
    }
    if (std::all_of(verdict_.begin(), verdict_.end(), [](int v) { return v >= 0; })) {
      close_segment();
    }
  }
  prune();
}

void PlackettLuce::prune() {
  const double kk = static_cast<double>(k());
  std::vector<bool> beaten(active_.size(), false);
  for (SystemId i = 0; i < k(); ++i) {
    if (!active_[static_cast<std::size_t>(i)]) continue;
    for (SystemId j = 0; j < k(); ++j) {
      if (i == j || !active_[static_cast<std::size_t>(j)]) continue;
      const auto n = counts().trials(i, j);
      if (n == 0) continue;
      const double nn = static_cast<double>(n);
      const double c = std::sqrt(std::log(4.0 * kk * kk * nn * nn / delta_) / (2.0 * nn));
      if (counts().estimate(i, j) - c > 0.5) beaten[static_cast<std::size_t>(j)] = true;
    }
  }
  std::size_t survivors = 0;
  for (std::size_t j = 0; j < active_.size(); ++j) survivors += active_[j] && !beaten[j] ? 1 : 0;
  if (survivors == 0) return;  // confident cycle; keep everyone
  for (std::size_t j = 0; j < active_.size(); ++j) {
    if (beaten[j]) active_[j] = false;
  }
  const auto left = active_set();
  if (left.size() == 1) declare(left.front());
}

}  // namespace activeeval::detail
