#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "covkit/dp.hpp"
#include "covkit/flow.hpp"
#include "covkit/learners.hpp"
#include "covkit/mdp.hpp"
#include "covkit/rng.hpp"

namespace covkit {

/// Requirement set at level k: the full support for k = 0, and the triplets
/// with c > c_min 2^k for k >= 1. Returned as flat (h,s,a) indices.
inline std::vector<int> active_set(const TargetFunction& target, int k) {
  if (k < 0) throw std::invalid_argument("active_set: k must be nonnegative");
  std::vector<int> out;
  if (k == 0) {
    for (std::size_t i = 0; i < target.c.size(); ++i)
      if (target.c[i] > 0.0) out.push_back(static_cast<int>(i));
    return out;
  }
  const double bar = target.c_min() * std::ldexp(1.0, k);
  for (std::size_t i = 0; i < target.c.size(); ++i)
    if (target.c[i] > bar) out.push_back(static_cast<int>(i));
  return out;
}

struct CovGameOptions {
  double beta_scale = 1.0;
  std::int64_t max_rounds = 10'000'000;
  bool store_episodes = true;
  /// Test hook: plan each round exactly on this kernel instead of running the
  /// optimistic learner (the known-transitions regime).
  const TabularMdp* oracle_planner = nullptr;
};

struct CovGameRun {
  EpisodeDataset dataset;
  std::int64_t tau = 0;
  bool covered = false;
  std::vector<std::pair<std::int64_t, int>> phase_trace;  // (round, new level)
  VisitCounts counts;
  UcbviStats stats;
};

/// Collects episodes until the visit counts dominate the target, with
/// probability at least 1 - delta.
///
/// Per round: the adversary's weights over the current requirement set act as
/// the reward for the optimistic planner (at confidence 1 - delta/2); one
/// episode is played; if the level k advanced (all requirements at or below
/// the new level are met) the adversary restarts uniformly on the shrunken
/// set, otherwise it is fed the indicator loss of the visited triplets.
/// Planner statistics persist across restarts. A zero target returns
/// immediately; exceeding max_rounds throws BudgetExceeded.
inline CovGameRun run_covgame(const TabularMdp& env, const TargetFunction& target,
                              double delta, Rng& rng, const CovGameOptions& opts = {}) {
  target.validate();
  if (target.num_states != env.num_states || target.num_actions != env.num_actions ||
      target.horizon != env.horizon)
    throw std::invalid_argument("run_covgame: dimension mismatch");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("run_covgame: delta must lie in (0,1)");

  const int S = env.num_states, A = env.num_actions, H = env.horizon;
  CovGameRun run;
  run.counts = VisitCounts(S, A, H);
  run.stats = UcbviStats(S, A, H);
  run.dataset = EpisodeDataset(H);

  const std::vector<std::size_t> support = target.support();
  if (support.empty()) {  // stopping precedes sampling
    run.covered = true;
    return run;
  }

  const double c_min = target.c_min();
  // lvl(i): first level whose requirement set no longer contains i, using the
  // same strict comparison as active_set.
  std::vector<int> lvl(support.size(), 1);
  int max_lvl = 1;
  for (std::size_t idx = 0; idx < support.size(); ++idx) {
    int j = 1;
    while (target.c[support[idx]] > c_min * std::ldexp(1.0, j)) ++j;
    lvl[idx] = j;
    max_lvl = std::max(max_lvl, j);
  }
  // uncovered_by_level[j] counts uncovered triplets outside the level-j set.
  std::vector<std::int64_t> uncovered_by_level(static_cast<std::size_t>(max_lvl) + 1, 0);
  for (std::size_t idx = 0; idx < support.size(); ++idx)
    for (int j = lvl[idx]; j <= max_lvl; ++j) ++uncovered_by_level[j];
  std::int64_t total_uncovered = static_cast<std::int64_t>(support.size());

  std::vector<char> is_covered(support.size(), 0);
  std::vector<int> support_pos(static_cast<std::size_t>(H) * S * A, -1);
  for (std::size_t idx = 0; idx < support.size(); ++idx)
    support_pos[support[idx]] = static_cast<int>(idx);

  int k = 0;
  WmfState wmf = wmf_init(std::vector<int>(support.begin(), support.end()));
  // Position of each flat triplet inside the adversary's current support.
  std::vector<int> wmf_pos(static_cast<std::size_t>(H) * S * A, -1);
  const auto rebuild_wmf_pos = [&]() {
    std::fill(wmf_pos.begin(), wmf_pos.end(), -1);
    for (std::size_t i = 0; i < wmf.support.size(); ++i) wmf_pos[wmf.support[i]] = static_cast<int>(i);
  };
  rebuild_wmf_pos();

  std::vector<double> reward(static_cast<std::size_t>(H) * S * A, 0.0);
  detail::UcbviWorkspace ws;
  UcbviPlan plan;
  std::vector<std::pair<int, double>> loss;

  for (std::int64_t t = 1; t <= opts.max_rounds; ++t) {
    for (std::size_t i = 0; i < wmf.support.size(); ++i)
      reward[wmf.support[i]] = wmf.weights[i];

    if (opts.oracle_planner != nullptr) {
      plan.policy = optimal_value(*opts.oracle_planner, reward).policy;
    } else {
      detail::ucbvi_plan_into(run.stats, reward, delta / 2.0, opts.beta_scale, ws, plan);
    }
    for (int i : wmf.support) reward[i] = 0.0;

    const Episode ep = sample_episode(env, plan.policy, rng);
    run.counts.add_episode(ep);
    run.stats.update(ep);
    if (opts.store_episodes) run.dataset.append(ep);

    loss.clear();
    for (int h = 0; h < H; ++h) {
      const int flat = static_cast<int>(env.sa_index(h, ep.states[h], ep.actions[h]));
      const int pos = support_pos[flat];
      if (pos >= 0 && !is_covered[pos] &&
          static_cast<double>(run.counts.n[flat]) >= target.c[flat]) {
        is_covered[pos] = 1;
        --total_uncovered;
        for (int j = lvl[pos]; j <= max_lvl; ++j) --uncovered_by_level[j];
      }
      const int wpos = wmf_pos[flat];
      if (wpos >= 0) loss.emplace_back(wpos, 1.0);
    }

    if (total_uncovered == 0) {
      run.tau = t;
      run.covered = true;
      return run;
    }

    int k_new = k;
    while (k_new + 1 < max_lvl && uncovered_by_level[k_new + 1] == 0) ++k_new;
    if (k_new != k) {
      k = k_new;
      wmf = wmf_init(active_set(target, k));
      rebuild_wmf_pos();
      run.phase_trace.emplace_back(t, k);
    } else {
      wmf_update(wmf, loss);
    }
  }
  throw BudgetExceeded("run_covgame: round cap " + std::to_string(opts.max_rounds) +
                       " reached with " + std::to_string(total_uncovered) +
                       " requirements uncovered");
}

}  // namespace covkit
