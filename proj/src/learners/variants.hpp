#pragma once

// Concrete learner classes. Internal to the library; callers go through
// create_learner.

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "activeeval/learners.hpp"

namespace activeeval::detail {

class UniformLearner final : public Learner {
 public:
  UniformLearner(AlgorithmSpec spec, int k, std::uint64_t seed);

 protected:
  Pair do_select() override;
};

// Interleaved Filter (IF2 pruning by default).
class InterleavedFilter final : public Learner {
 public:
  InterleavedFilter(AlgorithmSpec spec, int k, std::uint64_t seed);
  std::vector<SystemId> active_set() const override;

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

 private:
  void reset_stats();

  double log_inv_delta_;
  bool prune_;
  SystemId champion_;
  std::vector<SystemId> remaining_;  // W, excluding the champion
  std::vector<double> wins_;         // champion's wins against each system
  std::vector<std::int64_t> n_;      // comparisons against each system
  std::size_t cursor_ = 0;
};

// Beat the Mean (online).
class BeatTheMean final : public Learner {
 public:
  BeatTheMean(AlgorithmSpec spec, int k, std::uint64_t seed);
  std::vector<SystemId> active_set() const override;

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

 private:
  double total_wins(SystemId b) const;
  std::int64_t total_n(SystemId b) const;

  double gamma_;
  double log_inv_delta_;
  std::vector<bool> active_;
  // Row b: b's credited wins / comparisons against each opponent.
  std::vector<double> w_;
  std::vector<std::int64_t> n_;
};

// Shared machinery for bracket tournaments (Knockout, SingleElimination).
class Bracket : public Learner {
 public:
  Bracket(AlgorithmSpec spec, int k, std::uint64_t seed);
  std::vector<SystemId> active_set() const override { return alive_; }

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

  // Called after each outcome of the current duel; returns true when the duel
  // is decided.
  virtual bool duel_done(double n, double p_hat) const = 0;
  virtual void on_new_round() {}
  int round() const { return round_; }

 private:
  void start_round();
  void finish_duel();

  std::vector<SystemId> alive_;
  std::vector<Pair> duels_;
  std::vector<SystemId> advanced_;
  std::size_t current_ = 0;
  double duel_wins_ = 0.0;  // wins of duels_[current_].first
  std::int64_t duel_n_ = 0;
  int round_ = 0;
};

class Knockout final : public Bracket {
 public:
  Knockout(AlgorithmSpec spec, int k, std::uint64_t seed);

 protected:
  bool duel_done(double n, double p_hat) const override;
  void on_new_round() override;

 private:
  double epsilon_, delta_, gamma_;
  double eps_r_ = 0.0, delta_r_ = 0.0;
  std::int64_t m_r_ = 0;
};

class SingleElimination final : public Bracket {
 public:
  SingleElimination(AlgorithmSpec spec, int k, std::uint64_t seed);

 protected:
  bool duel_done(double n, double p_hat) const override;

 private:
  std::int64_t m_;
};

class SequentialElimination final : public Learner {
 public:
  SequentialElimination(AlgorithmSpec spec, int k, std::uint64_t seed);
  std::vector<SystemId> active_set() const override;

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

 private:
  std::int64_t m_;
  SystemId champion_;
  std::vector<SystemId> queue_;  // challengers not yet faced
  std::size_t next_ = 0;
  double champ_wins_ = 0.0;
  std::int64_t duel_n_ = 0;
};

// PAC Plackett-Luce winner search via budgeted QuickSort rounds.
class PlackettLuce final : public Learner {
 public:
  PlackettLuce(AlgorithmSpec spec, int k, std::uint64_t seed);
  std::vector<SystemId> active_set() const override;

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

 private:
  struct Segment {
    std::vector<SystemId> items;
  };
  void start_round();
  void open_segment();
  void close_segment();
  void prune();

  double delta_;
  std::vector<bool> active_;
  std::vector<Segment> stack_;
  // Current partition step.
  bool open_ = false;
  SystemId pivot_ = 0;
  std::vector<SystemId> members_;
  std::vector<int> verdict_;  // -1 pending/unissued, 0 worse than pivot, 1 better
  std::vector<bool> issued_;
  std::size_t reissue_ = 0;
  std::int64_t round_budget_ = 0;
  std::int64_t round_used_ = 0;
};

class Rucb final : public Learner {
 public:
  Rucb(AlgorithmSpec spec, int k, std::uint64_t seed);

 protected:
  Pair do_select() override;

 private:
  double alpha_;
  std::optional<SystemId> best_;  // hypothesised best arm B
};

class Rcs final : public Learner {
 public:
  Rcs(AlgorithmSpec spec, int k, std::uint64_t seed);

 protected:
  Pair do_select() override;

 private:
  double alpha_;
  std::vector<std::int64_t> champion_count_;
};

class Rmed final : public Learner {
 public:
  Rmed(AlgorithmSpec spec, int k, std::uint64_t seed);
  double exploration() const { return f_k_; }

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

 private:
  void refresh_pair(SystemId i, SystemId j);
  SystemId leader() const;

  double f_k_;
  std::vector<double> empirical_divergence_;  // I_i
  std::vector<double> term_;                  // cached contribution of (i, j) to I_i
  std::size_t init_next_ = 0;
  std::vector<SystemId> loop_current_;        // L_C
  std::vector<bool> in_remaining_;            // L_R membership
  std::vector<bool> in_next_;                 // L_N membership
  std::size_t loop_pos_ = 0;
  bool pending_bookkeeping_ = false;
};

class Savage final : public Learner {
 public:
  Savage(AlgorithmSpec spec, int k, std::uint64_t seed);
  std::vector<SystemId> active_set() const override;

 protected:
  Pair do_select() override;
  void on_update(const ComparisonOutcome& outcome) override;

 private:
  double radius(std::int64_t n) const;
  // Copeland bounds from the resolved pairs: wins so far, wins still possible.
  void bounds(std::vector<int>& lo, std::vector<int>& hi) const;
  void refresh();

  double delta_;
  std::vector<bool> pair_active_;
  std::vector<int> resolved_;  // per pair: 1 first wins, -1 second wins, 0 open
};

class Ccb final : public Learner {
 public:
  Ccb(AlgorithmSpec spec, int k, std::uint64_t seed);

 protected:
  Pair do_select() override;

 private:
  void reset();

  double alpha_;
  std::vector<bool> in_b_;                    // B_t
  std::vector<std::vector<bool>> b_sets_;     // B_t^i
  int l_c_;
};

class Dts final : public Learner {
 public:
  Dts(AlgorithmSpec spec, int k, std::uint64_t seed, bool plus_plus);

 protected:
  Pair do_select() override;

 private:
  double alpha_;
  bool plus_plus_;
};

}  // namespace activeeval::detail
