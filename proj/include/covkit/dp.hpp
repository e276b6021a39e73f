#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "covkit/mdp.hpp"
#include "covkit/rng.hpp"

namespace covkit {

/// Forward recursion for the state-action distribution of a policy:
/// rho_h(s,a) = sum_{s',a'} rho_{h-1}(s',a') p_{h-1}(s|s',a') pi_h(a|s).
inline Occupancy visitation_distribution(const TabularMdp& mdp, const Policy& policy) {
  if (policy.num_states != mdp.num_states || policy.num_actions != mdp.num_actions ||
      policy.horizon != mdp.horizon)
    throw std::invalid_argument("visitation_distribution: dimension mismatch");
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  Occupancy occ(S, A, H, /*normalized=*/true);
  std::vector<double> state_mass(S, 0.0);
  state_mass[mdp.initial_state] = 1.0;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      if (state_mass[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) occ.at(h, s, a) = state_mass[s] * policy.pi(h, s, a);
    }
    if (h + 1 < H) {
      std::vector<double> next(S, 0.0);
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          const double mass = occ.at(h, s, a);
          if (mass == 0.0) continue;
          for (int s2 = 0; s2 < S; ++s2) next[s2] += mass * mdp.p(h, s, a, s2);
        }
      state_mass.swap(next);
    }
  }
  return occ;
}

struct PlanResult {
  double value = 0.0;
  Policy policy;
};

/// Exact backward induction for max_pi sum_{h,s,a} p^pi_h(s,a) r_h(s,a).
/// Greedy ties break toward the lowest action index, so the planner is
/// deterministic. `reward` is flat [h][s][a] and may be any finite array.
inline PlanResult optimal_value(const TabularMdp& mdp, const std::vector<double>& reward) {
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  if (reward.size() != mdp.num_triplets())
    throw std::invalid_argument("optimal_value: reward size mismatch");
  std::vector<double> value_next(S, 0.0), value_here(S, 0.0);
  std::vector<int> greedy(static_cast<std::size_t>(H) * S, 0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = reward[mdp.sa_index(h, s, a)];
        if (h + 1 < H)
          for (int s2 = 0; s2 < S; ++s2) q += mdp.p(h, s, a, s2) * value_next[s2];
        if (q > best) { best = q; best_a = a; }
      }
      value_here[s] = best;
      greedy[static_cast<std::size_t>(h) * S + s] = best_a;
    }
    value_next = value_here;
  }
  PlanResult out;
  out.value = value_next[mdp.initial_state];
  out.policy = Policy::deterministic(S, A, H, greedy);
  return out;
}

/// Max over policies of the probability of being in state s at stage h.
/// Computed as the optimal value of the indicator-reward problem.
inline double max_reach(const TabularMdp& mdp, int h, int s) {
  if (h < 0 || h >= mdp.horizon || s < 0 || s >= mdp.num_states)
    throw std::invalid_argument("max_reach: index out of range");
  std::vector<double> reward(mdp.num_triplets(), 0.0);
  for (int a = 0; a < mdp.num_actions; ++a) reward[mdp.sa_index(h, s, a)] = 1.0;
  return optimal_value(mdp, reward).value;
}

/// Max over policies of P(s_h = s, a_h = a). The action is free at the target
/// state, so this equals max_reach(h, s).
inline double max_reach(const TabularMdp& mdp, int h, int s, int a) {
  if (a < 0 || a >= mdp.num_actions)
    throw std::invalid_argument("max_reach: action out of range");
  std::vector<double> reward(mdp.num_triplets(), 0.0);
  reward[mdp.sa_index(h, s, a)] = 1.0;
  return optimal_value(mdp, reward).value;
}

/// Expected return of a policy for an arbitrary reward array:
/// inner product of the visitation distribution with the reward.
inline double policy_value(const TabularMdp& mdp, const Policy& policy,
                           const std::vector<double>& reward) {
  if (reward.size() != mdp.num_triplets())
    throw std::invalid_argument("policy_value: reward size mismatch");
  for (double v : reward)
    if (!std::isfinite(v)) throw std::invalid_argument("policy_value: non-finite reward");
  const Occupancy occ = visitation_distribution(mdp, policy);
  double total = 0.0;
  for (std::size_t i = 0; i < reward.size(); ++i) total += occ.rho[i] * reward[i];
  return total;
}

/// Suboptimality of a policy; nonnegative up to float error.
inline double policy_gap(const TabularMdp& mdp, const Policy& policy,
                         const std::vector<double>& reward) {
  return optimal_value(mdp, reward).value - policy_value(mdp, policy, reward);
}

/// Simulates one episode. Per stage the draws are: action, reward (Bernoulli
/// on the mean), then next state; this order is part of the replay contract.
inline Episode sample_episode(const TabularMdp& mdp, const Policy& policy, Rng& rng) {
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  Episode ep;
  ep.states.resize(H);
  ep.actions.resize(H);
  ep.rewards.resize(H);
  int s = mdp.initial_state;
  std::vector<double> probs(A);
  for (int h = 0; h < H; ++h) {
    for (int a = 0; a < A; ++a) probs[a] = policy.pi(h, s, a);
    const int a = sample_index(rng, probs.data(), A);
    ep.states[h] = s;
    ep.actions[h] = a;
    ep.rewards[h] = bernoulli(rng, mdp.r(h, s, a)) ? 1.0 : 0.0;
    if (h + 1 < H) {
      double u = uniform01(rng);
      int s2 = S - 1;
      double acc = 0.0;
      for (int cand = 0; cand < S; ++cand) {
        acc += mdp.p(h, s, a, cand);
        if (u < acc) { s2 = cand; break; }
      }
      s = s2;
    }
  }
  return ep;
}

/// Policy that realizes an occupancy: pi_h(a|s) = rho_h(s,a) / sum_b rho_h(s,b),
/// uniform at states carrying no stage mass. Running it reproduces rho (up to
/// normalization) whenever rho satisfies the navigation constraints.
inline Policy extract_policy(const Occupancy& occ) {
  const int S = occ.num_states, A = occ.num_actions, H = occ.horizon;
  for (double v : occ.rho)
    if (v < -1e-12 || !std::isfinite(v))
      throw std::invalid_argument("extract_policy: negative occupancy entry");
  Policy out(Policy::Kind::Stochastic, S, A, H);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      double mass = 0.0;
      for (int a = 0; a < A; ++a) mass += std::max(0.0, occ.at(h, s, a));
      if (mass > 0.0) {
        for (int a = 0; a < A; ++a) out.pi(h, s, a) = std::max(0.0, occ.at(h, s, a)) / mass;
      } else {
        for (int a = 0; a < A; ++a) out.pi(h, s, a) = 1.0 / A;
      }
    }
  return out;
}

}  // namespace covkit
