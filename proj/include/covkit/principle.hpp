#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "covkit/covgame.hpp"
#include "covkit/dp.hpp"
#include "covkit/flow.hpp"
#include "covkit/learners.hpp"
#include "covkit/mdp.hpp"

namespace covkit {

/// Best-policy-identification threshold:
///   16 H^2 log(2/delta) + 96 S A H^3 log(1+t).
inline double beta_bpi(std::int64_t t, double delta, int S, int A, int H) {
  if (t < 0) throw std::invalid_argument("beta_bpi: t must be nonnegative");
  return 16.0 * H * H * std::log(2.0 / delta) +
         96.0 * S * A * H * H * H * std::log(1.0 + static_cast<double>(t));
}

/// Greedy single pass that keeps an episode iff it visits some triplet whose
/// requirement is still unmet, stopping as soon as every requirement is met.
/// The input must already cover the target; the output covers it with at most
/// sum ceil(c) episodes.
inline EpisodeDataset prune_dataset(const EpisodeDataset& input, const TargetFunction& c) {
  c.validate();
  const int H = c.horizon;
  if (input.horizon != H && !input.empty())
    throw std::invalid_argument("prune_dataset: horizon mismatch");
  {
    VisitCounts check(c.num_states, c.num_actions, H);
    check.add_dataset(input);
    if (!check.dominates(c.c))
      throw std::invalid_argument("prune_dataset: input does not cover the target");
  }
  EpisodeDataset out(H);
  VisitCounts kept(c.num_states, c.num_actions, H);
  std::int64_t unmet = 0;
  for (double v : c.c)
    if (v > 0.0) ++unmet;
  if (unmet == 0) return out;
  for (std::size_t e = 0; e < input.size(); ++e) {
    bool useful = false;
    for (int h = 0; h < H && !useful; ++h) {
      const std::size_t i = c.idx(h, input.state(e, h), input.action(e, h));
      useful = static_cast<double>(kept.n[i]) < c.c[i];
    }
    if (!useful) continue;
    for (int h = 0; h < H; ++h) {
      const std::size_t i = c.idx(h, input.state(e, h), input.action(e, h));
      const std::int64_t before = kept.n[i]++;
      if (c.c[i] > 0.0 && static_cast<double>(before) < c.c[i] &&
          static_cast<double>(before + 1) >= c.c[i])
        --unmet;
    }
    out.append_from(input, e);
    if (unmet == 0) break;
  }
  return out;
}

/// Snapshot of the statistics at the end of a phase, as consumed by the
/// next phase's target construction.
struct PrinciplePhaseState {
  int k = 0;
  TabularMdp model;                 // MLE kernel
  std::vector<double> r_hat;
  VisitCounts counts;
  std::int64_t t = 0;               // effective episodes so far
  std::optional<double> v_lower;    // unset right after the burn-in
};

struct LowerBoundResult {
  FlowStatus status = FlowStatus::Infeasible;
  double value = 0.0;
  Occupancy argmax;  // maximizer of the capped program (before the deduction)
};

/// High-probability lower bound on the optimal return:
///   sup { rho' r_hat : rho in Omega(model), rho <= 2^-k n } -
///   sqrt(2^(2-k) H beta_bpi(t_k, delta/2)).
inline LowerBoundResult lower_bound_value(const TabularMdp& model,
                                          const std::vector<double>& r_hat,
                                          const VisitCounts& counts, int k,
                                          std::int64_t t_k, double delta,
                                          double beta_scale = 1.0) {
  const ConstrainedValue best = constrained_best_value(model, r_hat, counts, k);
  LowerBoundResult out;
  out.status = best.status;
  if (best.status != FlowStatus::Optimal) return out;
  const double width = std::sqrt(std::ldexp(1.0, 2 - k) * model.horizon * beta_scale *
                                 beta_bpi(t_k, delta / 2.0, model.num_states,
                                          model.num_actions, model.horizon));
  out.value = best.value - width;
  out.argmax = best.occupancy;
  return out;
}

struct TargetsResult {
  FlowStatus status = FlowStatus::Infeasible;
  TargetFunction targets;
};

/// Phase-k coverage requirement:
///   c_h^k(s,a) = 2^k min( sup_{rho active at k-1} rho_h(s,a)
///                         + 2 sqrt(H beta_bpi(t_{k-1} + SAH 2^k, delta/2) 2^(1-k)),
///                         1 ),
/// restricted to the reachable triplets. For k = 1 the active set is all of
/// Omega(model): no cap and no value floor. An empty active set surfaces as
/// an infeasible status.
inline TargetsResult principle_targets(const PrinciplePhaseState& prev, int k,
                                       double delta, double beta_scale,
                                       const std::vector<char>& reachable) {
  const int S = prev.model.num_states, A = prev.model.num_actions, H = prev.model.horizon;
  TargetsResult out;
  out.targets = TargetFunction(S, A, H);
  const double sah = static_cast<double>(S) * A * H;
  const std::int64_t t_arg =
      prev.t + static_cast<std::int64_t>(sah * std::ldexp(1.0, k));
  const double bonus = 2.0 * std::sqrt(H * beta_scale * beta_bpi(t_arg, delta / 2.0, S, A, H) *
                                       std::ldexp(1.0, 1 - k));
  const std::optional<int> cap_k =
      prev.v_lower.has_value() ? std::optional<int>(prev.k) : std::nullopt;
  const double scale = std::ldexp(1.0, k);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const std::size_t i = out.targets.idx(h, s, a);
        if (!reachable[i]) continue;
        const ConstrainedOccupancy occ = constrained_max_occupancy(
            prev.model, prev.r_hat, prev.counts, cap_k, prev.v_lower, h, s, a);
        if (occ.status != FlowStatus::Optimal) {
          out.status = occ.status;
          return out;
        }
        out.targets.c[i] = scale * std::min(occ.value + bonus, 1.0);
      }
  out.status = FlowStatus::Optimal;
  return out;
}

enum class PrincipleStatus {
  Ok,
  EmptyActiveSet,   // the capped/active-set program became infeasible
  BudgetExceeded,
  PhaseCapExceeded,
};

inline const char* to_string(PrincipleStatus s) {
  switch (s) {
    case PrincipleStatus::Ok: return "ok";
    case PrincipleStatus::EmptyActiveSet: return "empty-active-set";
    case PrincipleStatus::BudgetExceeded: return "budget-exceeded";
    case PrincipleStatus::PhaseCapExceeded: return "phase-cap-exceeded";
  }
  return "?";
}

struct PrinciplePhaseLog {
  int k = 0;
  std::int64_t raw_episodes = 0;        // T_k
  std::int64_t effective_episodes = 0;  // d_k
  std::int64_t cumulative_effective = 0;  // t_k
  bool pruned = false;
  double v_lower = 0.0;
  double stop_width = 0.0;
  double target_sum = 0.0;
  std::vector<double> target;           // kept when record_targets is set
};

struct PrincipleResult {
  PrincipleStatus status = PrincipleStatus::Ok;
  Policy policy;                     // recommendation, valid when status == Ok
  std::int64_t effective_episodes = 0;
  std::int64_t raw_episodes = 0;
  int phases = 0;
  std::vector<PrinciplePhaseLog> phase_log;
  std::vector<PrinciplePhaseState> phase_states;  // kept when record_states is set
  std::string diagnostic;
};

struct PrincipleOptions {
  double beta_scale = 1.0;
  int max_phases = 48;
  std::int64_t max_total_episodes = 1'000'000'000LL;
  std::int64_t covgame_max_rounds = 10'000'000LL;
  bool record_targets = false;
  bool record_states = false;
};

/// Best-policy identification with implicit elimination in occupancy space.
///
/// Burn-in covers every reachable triplet once (budget delta/4). Phase k
/// builds proportional-coverage targets from the previous active set, runs
/// the coverage sampler at budget delta/(4(k+1)^2), prunes the returned
/// dataset to at most SAH 2^k episodes when it is larger, refreshes the
/// statistics from the effective dataset only, and computes the lower
/// confidence bound. It stops when
///   sqrt(2^(2-k) H beta_bpi(t_k, delta/2)) <= eps
/// and recommends the policy extracted from the capped-program maximizer.
inline PrincipleResult run_principle(const TabularMdp& env, double eps, double delta,
                                     Rng& rng, const PrincipleOptions& opts = {}) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("run_principle: eps in (0,1]");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("run_principle: delta in (0,1)");
  const int S = env.num_states, A = env.num_actions, H = env.horizon;
  const double sah = static_cast<double>(S) * A * H;

  PrincipleResult res;

  // The reachable set is instance metadata: requirements are only placed on
  // triplets some policy can actually visit.
  std::vector<char> reachable(static_cast<std::size_t>(H) * S * A, 0);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      const bool ok = max_reach(env, h, s) > 0.0;
      for (int a = 0; a < A; ++a)
        reachable[(static_cast<std::size_t>(h) * S + s) * A + a] = ok ? 1 : 0;
    }

  UcbviStats master(S, A, H);
  PrinciplePhaseState state;
  state.k = 0;

  const auto run_phase_covgame = [&](const TargetFunction& c, double phase_delta,
                                     CovGameRun& out) {
    CovGameOptions copts;
    copts.beta_scale = opts.beta_scale;
    copts.store_episodes = true;
    copts.max_rounds =
        std::min(opts.covgame_max_rounds, opts.max_total_episodes - res.raw_episodes);
    if (copts.max_rounds <= 0)
      throw BudgetExceeded("run_principle: episode budget exhausted");
    out = run_covgame(env, c, phase_delta, rng, copts);
  };

  try {
    TargetFunction burn_in(S, A, H);
    for (std::size_t i = 0; i < reachable.size(); ++i)
      if (reachable[i]) burn_in.c[i] = 1.0;
    CovGameRun burn;
    run_phase_covgame(burn_in, delta / 4.0, burn);
    res.raw_episodes += burn.tau;
    res.effective_episodes += burn.tau;
    master.add_dataset(burn.dataset);
    state.model = master.empirical_mdp(env.initial_state);
    state.r_hat = master.r_hat_array();
    state.counts = master.visit_counts();
    state.t = res.effective_episodes;
    {
      PrinciplePhaseLog log;
      log.k = 0;
      log.raw_episodes = burn.tau;
      log.effective_episodes = burn.tau;
      log.cumulative_effective = state.t;
      log.target_sum = static_cast<double>(burn_in.support().size());
      res.phase_log.push_back(std::move(log));
      if (opts.record_states) res.phase_states.push_back(state);
    }

    for (int k = 1; k <= opts.max_phases; ++k) {
      const TargetsResult targets = principle_targets(state, k, delta, opts.beta_scale,
                                                      reachable);
      if (targets.status != FlowStatus::Optimal) {
        res.status = PrincipleStatus::EmptyActiveSet;
        res.diagnostic = "phase " + std::to_string(k) +
                         ": active-set program returned " + to_string(targets.status);
        return res;
      }

      CovGameRun phase;
      run_phase_covgame(targets.targets, delta / (4.0 * (k + 1) * (k + 1)), phase);
      res.raw_episodes += phase.tau;

      const double cap = sah * std::ldexp(1.0, k);
      EpisodeDataset effective;
      bool pruned = false;
      if (static_cast<double>(phase.tau) > cap) {
        effective = prune_dataset(phase.dataset, targets.targets);
        pruned = true;
      } else {
        effective = std::move(phase.dataset);
      }
      const std::int64_t d_k = static_cast<std::int64_t>(effective.size());
      master.add_dataset(effective);
      res.effective_episodes += d_k;

      state.k = k;
      state.model = master.empirical_mdp(env.initial_state);
      state.r_hat = master.r_hat_array();
      state.counts = master.visit_counts();
      state.t = res.effective_episodes;

      const LowerBoundResult lb = lower_bound_value(state.model, state.r_hat, state.counts,
                                                    k, state.t, delta, opts.beta_scale);
      if (lb.status != FlowStatus::Optimal) {
        res.status = PrincipleStatus::EmptyActiveSet;
        res.diagnostic = "phase " + std::to_string(k) + ": lower-bound program returned " +
                         to_string(lb.status);
        return res;
      }
      state.v_lower = lb.value;

      const double width =
          std::sqrt(std::ldexp(1.0, 2 - k) * H * opts.beta_scale *
                    beta_bpi(state.t, delta / 2.0, S, A, H));

      PrinciplePhaseLog log;
      log.k = k;
      log.raw_episodes = phase.tau;
      log.effective_episodes = d_k;
      log.cumulative_effective = state.t;
      log.pruned = pruned;
      log.v_lower = lb.value;
      log.stop_width = width;
      for (double v : targets.targets.c) log.target_sum += v;
      if (opts.record_targets) log.target = targets.targets.c;
      res.phase_log.push_back(std::move(log));
      if (opts.record_states) res.phase_states.push_back(state);
      res.phases = k;

      if (width <= eps) {
        res.policy = extract_policy(lb.argmax);
        res.status = PrincipleStatus::Ok;
        return res;
      }
    }
    res.status = PrincipleStatus::PhaseCapExceeded;
    res.diagnostic = "phase cap " + std::to_string(opts.max_phases) + " reached";
    return res;
  } catch (const BudgetExceeded& e) {
    res.status = PrincipleStatus::BudgetExceeded;
    res.diagnostic = e.what();
    return res;
  }
}

}  // namespace covkit
