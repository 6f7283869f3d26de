#include <algorithm>

#include "variants.hpp"

namespace activeeval::detail {

Ccb::Ccb(AlgorithmSpec spec, int k, std::uint64_t seed) : Learner(std::move(spec), k, seed) {
  alpha_ = this->spec().get("alpha", 0.51);
  reset();
}

void Ccb::reset() {
  const auto n = static_cast<std::size_t>(k());
  in_b_.assign(n, true);
  b_sets_.assign(n, std::vector<bool>(n, false));
  l_c_ = k();
}

Pair Ccb::do_select() {
  const int n = k();
  const auto nn = static_cast<std::size_t>(n);
  std::vector<double> up(nn * nn), lo(nn * nn);
  const auto at = [nn](SystemId i, SystemId j) {
    return static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j);
  };
  for (SystemId i = 0; i < n; ++i) {
    for (SystemId j = 0; j < n; ++j) {
      up[at(i, j)] = upper(i, j, alpha_);
      lo[at(i, j)] = lower(i, j, alpha_);
    }
  }
  std::vector<int> c_up(nn, 0), c_lo(nn, 0);
  for (SystemId i = 0; i < n; ++i) {
    for (SystemId j = 0; j < n; ++j) {
      if (i == j) continue;
      c_up[static_cast<std::size_t>(i)] += up[at(i, j)] >= 0.5 ? 1 : 0;
      c_lo[static_cast<std::size_t>(i)] += lo[at(i, j)] > 0.5 ? 1 : 0;
    }
  }
  const int max_up = *std::max_element(c_up.begin(), c_up.end());
  const int max_lo = *std::max_element(c_lo.begin(), c_lo.end());
  std::vector<SystemId> top;
  for (SystemId i = 0; i < n; ++i) {
    if (c_up[static_cast<std::size_t>(i)] == max_up) top.push_back(i);
  }
  const auto set_size = [](const std::vector<bool>& s) {
    return static_cast<int>(std::count(s.begin(), s.end(), true));
  };

  // Reset disproven hypotheses.
  bool disproven = false;
  for (SystemId i = 0; i < n && !disproven; ++i) {
    for (SystemId j = 0; j < n && !disproven; ++j) {
      disproven = b_sets_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
                  lo[at(i, j)] > 0.5;
    }
  }
  if (disproven) reset();

  // Remove non-Copeland winners.
  for (SystemId i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (!in_b_[iu] || c_up[iu] >= max_lo) continue;
    in_b_[iu] = false;
    if (set_size(b_sets_[iu]) != l_c_ + 1) {
      for (SystemId j = 0; j < n; ++j) {
        b_sets_[iu][static_cast<std::size_t>(j)] = j != i && up[at(i, j)] < 0.5;
      }
    }
  }
  if (set_size(in_b_) == 0) reset();

  // Add Copeland winners.
  for (SystemId i : top) {
    const auto iu = static_cast<std::size_t>(i);
    if (c_lo[iu] != c_up[iu]) continue;
    in_b_[iu] = true;
    b_sets_[iu].assign(nn, false);
    l_c_ = n - 1 - c_lo[iu];
    for (SystemId j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& s = b_sets_[static_cast<std::size_t>(j)];
      const int size = set_size(s);
      if (size < l_c_ + 1) {
        s.assign(nn, false);
      } else if (size > l_c_ + 1) {
        std::vector<std::size_t> members;
        for (std::size_t m = 0; m < nn; ++m) {
          if (s[m]) members.push_back(m);
        }
        std::shuffle(members.begin(), members.end(), rng());
        for (std::size_t m = static_cast<std::size_t>(l_c_ + 1); m < members.size(); ++m) {
          s[members[m]] = false;
        }
      }
    }
  }

  // Occasionally probe an unresolved pair inside some B^i.
  if (bernoulli(rng(), 0.25)) {
    std::vector<Pair> open;
    for (SystemId i = 0; i < n; ++i) {
      for (SystemId j = 0; j < n; ++j) {
        if (b_sets_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
            lo[at(i, j)] <= 0.5 && 0.5 <= up[at(i, j)]) {
          open.push_back({i, j});
        }
      }
    }
    if (!open.empty()) return open[uniform_index(rng(), open.size())];
  }

  std::vector<SystemId> pool = top;
  std::vector<SystemId> both;
  for (SystemId i : top) {
    if (in_b_[static_cast<std::size_t>(i)]) both.push_back(i);
  }
  if (!both.empty() && bernoulli(rng(), 2.0 / 3.0)) pool = both;
  const SystemId c = pool[uniform_index(rng(), pool.size())];
  const auto cu = static_cast<std::size_t>(c);

  const bool use_b = bernoulli(rng(), 0.5) && set_size(b_sets_[cu]) > 0;
  std::vector<double> score(nn);
  std::vector<bool> allowed(nn, false);
  bool any = false;
  for (SystemId j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    score[ju] = up[at(j, c)];
    allowed[ju] = j != c && (!use_b || b_sets_[cu][ju]) && lo[at(j, c)] <= 0.5;
    any = any || allowed[ju];
  }
  if (!any) {
    for (SystemId j = 0; j < n; ++j) allowed[static_cast<std::size_t>(j)] = j != c;
  }
  return {c, static_cast<SystemId>(argmax_random(score, allowed))};
}

}  // namespace activeeval::detail
