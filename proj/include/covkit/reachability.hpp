#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "covkit/covgame.hpp"
#include "covkit/learners.hpp"
#include "covkit/mdp.hpp"

namespace covkit {

/// Confidence interval on the maximum visitation probability of one (h,s).
struct ReachInterval {
  double lower = 0.0;
  double upper = 1.0;
  std::int64_t episodes = 0;
};

/// Theoretical regret bound of the optimistic planner under changing rewards:
///   65536 S A H^2 (log(2SAH/delta) + 6S) log(T+1)^2,
/// optionally shrunk by beta_scale together with the planner's bonuses.
inline double ucbvi_regret_bound(std::int64_t T, double delta, int S, int A, int H,
                                 double beta_scale = 1.0) {
  const double sah = static_cast<double>(S) * A * H;
  const double lg = std::log(static_cast<double>(T) + 1.0);
  return beta_scale * 65536.0 * S * A * H * H * (std::log(2.0 * sah / delta) + 6.0 * S) *
         lg * lg;
}

/// Smallest T with 4 R(T) + 6 log(4/delta) <= eps0 T / 4, found by doubling
/// then bisection. regret_fn must be nondecreasing and sublinear. Throws when
/// the answer exceeds 1e12.
inline std::int64_t horizon_T(double eps0, double delta,
                              const std::function<double(std::int64_t)>& regret_fn) {
  if (!(eps0 > 0.0 && eps0 <= 1.0)) throw std::invalid_argument("horizon_T: eps0 in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("horizon_T: delta in (0,1)");
  const double slack = 6.0 * std::log(4.0 / delta);
  const auto ok = [&](std::int64_t T) {
    return 4.0 * regret_fn(T) + slack <= eps0 * static_cast<double>(T) / 4.0;
  };
  constexpr std::int64_t kCap = 1'000'000'000'000LL;
  std::int64_t hi = 1;
  while (!ok(hi)) {
    if (hi > kCap)
      throw std::runtime_error("horizon_T: required episode count exceeds 1e12");
    hi *= 2;
  }
  std::int64_t lo = hi / 2;  // ok(lo) is false (or lo == 0)
  while (lo + 1 < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid; else lo = mid;
  }
  return hi;
}

struct ReachOptions {
  double beta_scale = 1.0;
  /// Runs whose horizon exceeds this are refused up front.
  std::int64_t max_episodes = 1'000'000'000'000LL;
};

/// Estimates max_pi P(s_h = s) by steering the optimistic planner toward the
/// target with an indicator reward for T = horizon_T(...) episodes, then
/// clipping the empirical rate:
///   lower = (n/(2T) - eps0/16) v 0,  upper = (2n/T + eps0/4) ^ 1.
inline ReachInterval estimate_reachability(const TabularMdp& env, int h, int s,
                                           double eps0, double delta, Rng& rng,
                                           const ReachOptions& opts = {}) {
  if (h < 0 || h >= env.horizon || s < 0 || s >= env.num_states)
    throw std::invalid_argument("estimate_reachability: target out of range");
  const int S = env.num_states, A = env.num_actions, H = env.horizon;
  const std::int64_t T = horizon_T(eps0, delta, [&](std::int64_t t) {
    return ucbvi_regret_bound(t, delta / 2.0, S, A, H, opts.beta_scale);
  });
  if (T > opts.max_episodes)
    throw BudgetExceeded("estimate_reachability: horizon " + std::to_string(T) +
                         " exceeds the episode budget " +
                         std::to_string(opts.max_episodes));

  std::vector<double> reward(static_cast<std::size_t>(H) * S * A, 0.0);
  for (int a = 0; a < A; ++a) reward[env.sa_index(h, s, a)] = 1.0;

  UcbviStats stats(S, A, H);
  detail::UcbviWorkspace ws;
  UcbviPlan plan;
  std::int64_t visits = 0;
  for (std::int64_t t = 0; t < T; ++t) {
    detail::ucbvi_plan_into(stats, reward, delta / 2.0, opts.beta_scale, ws, plan);
    const Episode ep = sample_episode(env, plan.policy, rng);
    stats.update(ep);
    if (ep.states[h] == s) ++visits;
  }

  ReachInterval out;
  out.episodes = T;
  const double rate = static_cast<double>(visits) / static_cast<double>(T);
  out.lower = std::max(rate / 2.0 - eps0 / 16.0, 0.0);
  out.upper = std::min(2.0 * rate + eps0 / 4.0, 1.0);
  return out;
}

/// Keeps every action of each (h,s) whose lower confidence bound clears the
/// threshold. `intervals` is indexed [h * S + s]; returns flat (h,s,a) indices.
inline std::vector<int> build_x_hat(const std::vector<ReachInterval>& intervals,
                                    double threshold, int S, int A, int H) {
  if (intervals.size() != static_cast<std::size_t>(S) * H)
    throw std::invalid_argument("build_x_hat: interval table size mismatch");
  std::vector<int> out;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      if (intervals[static_cast<std::size_t>(h) * S + s].lower >= threshold)
        for (int a = 0; a < A; ++a)
          out.push_back((h * S + s) * A + a);
  return out;
}

}  // namespace covkit
