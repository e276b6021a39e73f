#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "covkit/covgame.hpp"
#include "covkit/dp.hpp"
#include "covkit/flow.hpp"
#include "covkit/learners.hpp"
#include "covkit/mdp.hpp"
#include "covkit/reachability.hpp"

namespace covkit {

/// Reward-free confidence threshold: 4 H^2 log(1/delta) + 24 S H^3 log(A(1+t)).
inline double beta_rf(std::int64_t t, double delta, int S, int A, int H) {
  if (t < 0) throw std::invalid_argument("beta_rf: t must be nonnegative");
  return 4.0 * H * H * std::log(1.0 / delta) +
         24.0 * S * H * H * H * std::log(A * (1.0 + static_cast<double>(t)));
}

struct PcePhase {
  int k = 0;
  std::int64_t episodes = 0;       // episodes this phase
  std::int64_t cumulative = 0;     // t_k
  double target_max = 0.0;
  double stop_width = 0.0;
  std::vector<std::int64_t> counts_after;  // cumulative n, kept when requested
};

struct PceResult {
  TabularMdp p_hat;                // MLE kernel (uniform rows when unvisited)
  std::int64_t total_episodes = 0; // reachability + all phases
  std::int64_t reachability_episodes = 0;
  std::int64_t phase_episodes = 0; // t_kappa
  int phases_completed = 0;        // kappa (0 = stopped right after burn-in)
  std::vector<int> x_hat;          // flat (h,s,a)
  std::vector<ReachInterval> intervals;  // [h*S+s]
  std::vector<PcePhase> phase_log;       // burn-in first (k = 0)
  VisitCounts counts;
  bool empty_x_hat = false;
  double delta_budget_spent = 0.0;
};

struct PceOptions {
  double beta_scale = 1.0;
  int max_phases = 48;
  std::int64_t max_total_episodes = 1'000'000'000LL;
  bool record_phase_counts = false;
};

/// Reward-free exploration via proportional coverage.
///
/// 1. For every (h,s), estimate the maximum visitation probability at
///    accuracy eps/(4SH^2) and confidence delta/(3SH).
/// 2. Keep the triplets whose lower bound clears eps/(32SH^2).
/// 3. Coverage burn-in with one sample per kept triplet (budget delta/6),
///    then phases k = 1, 2, ... with targets 2^k * upper-bound, each at
///    budget delta/(6(k+1)^2), until
///    sqrt(H * beta_rf(t_k, delta/3) * 2^(4-k)) <= eps.
///
/// Statistics accumulate over the burn-in and phase datasets; reachability
/// episodes are excluded from the model estimate. An empty kept set returns
/// immediately with a uniform kernel and a warning flag.
inline PceResult run_pce(const TabularMdp& env, double eps, double delta, Rng& rng,
                         const PceOptions& opts = {}) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("run_pce: eps in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("run_pce: delta in (0,1)");
  const int S = env.num_states, A = env.num_actions, H = env.horizon;

  PceResult res;
  res.counts = VisitCounts(S, A, H);
  UcbviStats model_stats(S, A, H);

  const double eps0 = eps / (4.0 * S * H * H);
  const double delta_reach = delta / (3.0 * S * H);
  res.intervals.resize(static_cast<std::size_t>(S) * H);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      ReachOptions ropts;
      ropts.beta_scale = opts.beta_scale;
      ropts.max_episodes = opts.max_total_episodes - res.reachability_episodes;
      res.intervals[static_cast<std::size_t>(h) * S + s] =
          estimate_reachability(env, h, s, eps0, delta_reach, rng, ropts);
      res.reachability_episodes +=
          res.intervals[static_cast<std::size_t>(h) * S + s].episodes;
    }
  res.total_episodes = res.reachability_episodes;
  // reachability (delta/3) + burn-in and phases (<= delta/3 total) + the
  // model concentration event (delta/3)
  res.delta_budget_spent = S * H * delta_reach + delta / 3.0;

  res.x_hat = build_x_hat(res.intervals, eps / (32.0 * S * H * H), S, A, H);
  if (res.x_hat.empty()) {
    res.empty_x_hat = true;
    res.p_hat = model_stats.empirical_mdp(env.initial_state);
    return res;
  }

  const auto run_phase = [&](int k, const TargetFunction& c, double phase_delta) {
    CovGameOptions copts;
    copts.beta_scale = opts.beta_scale;
    copts.store_episodes = false;
    copts.max_rounds = opts.max_total_episodes - res.total_episodes;
    if (copts.max_rounds <= 0)
      throw BudgetExceeded("run_pce: episode budget exhausted before phase " +
                           std::to_string(k));
    const CovGameRun run = run_covgame(env, c, phase_delta, rng, copts);
    model_stats.merge(run.stats);
    for (std::size_t i = 0; i < res.counts.n.size(); ++i) res.counts.n[i] += run.counts.n[i];
    res.total_episodes += run.tau;
    res.phase_episodes += run.tau;
    res.delta_budget_spent += phase_delta;
    PcePhase pl;
    pl.k = k;
    pl.episodes = run.tau;
    pl.cumulative = res.phase_episodes;
    pl.target_max = c.c_max();
    if (opts.record_phase_counts) pl.counts_after = res.counts.n;
    res.phase_log.push_back(std::move(pl));
  };

  TargetFunction burn_in(S, A, H);
  for (int i : res.x_hat) burn_in.c[i] = 1.0;
  run_phase(0, burn_in, delta / 6.0);

  for (int k = 1; k <= opts.max_phases; ++k) {
    TargetFunction c(S, A, H);
    const double scale = std::ldexp(1.0, k);
    for (int i : res.x_hat) {
      const int hs = i / A;
      c.c[i] = scale * res.intervals[hs].upper;
    }
    run_phase(k, c, delta / (6.0 * (k + 1) * (k + 1)));
    res.phases_completed = k;

    const double width = std::sqrt(H * opts.beta_scale *
                                   beta_rf(res.phase_episodes, delta / 3.0, S, A, H) *
                                   std::ldexp(1.0, 4 - k));
    res.phase_log.back().stop_width = width;
    if (width <= eps) {
      res.p_hat = model_stats.empirical_mdp(env.initial_state);
      return res;
    }
  }
  throw BudgetExceeded("run_pce: phase cap " + std::to_string(opts.max_phases) +
                       " reached before the stopping width fell below eps");
}

/// Plans on the estimated kernel for an arbitrary reward. The output is the
/// deterministic greedy policy of exact backward induction.
inline Policy rfe_plan(const TabularMdp& p_hat, const std::vector<double>& reward) {
  return optimal_value(p_hat, reward).policy;
}

}  // namespace covkit
