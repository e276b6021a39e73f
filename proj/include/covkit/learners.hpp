#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "covkit/dp.hpp"
#include "covkit/mdp.hpp"

namespace covkit {

// ---------------------------------------------------------------------------
// Weighted-majority forecaster over a finite support, with the adaptive
// small-loss learning rate xi_t = min{1/2, sqrt(ln K / (1 + L*_t))}, where
// L*_t is the smallest cumulative loss so far. Weights are recomputed from
// cumulative losses every round, so the rate may change freely.
// ---------------------------------------------------------------------------

struct WmfState {
  std::vector<int> support;            // flat (h,s,a) indices, fixed order
  std::vector<double> cumulative_loss; // per support element
  double cumulative_alg_loss = 0.0;    // sum over rounds of <weights, loss>
  double learning_rate = 0.5;
  std::vector<double> weights;
  std::int64_t rounds = 0;
};

inline WmfState wmf_init(std::vector<int> support) {
  if (support.empty()) throw std::invalid_argument("wmf_init: empty support");
  WmfState st;
  const double w = 1.0 / static_cast<double>(support.size());
  st.cumulative_loss.assign(support.size(), 0.0);
  st.weights.assign(support.size(), w);
  st.support = std::move(support);
  return st;
}

namespace detail {

inline void wmf_recompute_weights(WmfState& st) {
  const std::size_t k = st.support.size();
  double min_loss = st.cumulative_loss[0];
  for (double v : st.cumulative_loss) min_loss = std::min(min_loss, v);
  st.learning_rate =
      std::min(0.5, std::sqrt(std::log(static_cast<double>(k)) / (1.0 + min_loss)));
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    st.weights[i] = std::exp(-st.learning_rate * (st.cumulative_loss[i] - min_loss));
    total += st.weights[i];
  }
  for (std::size_t i = 0; i < k; ++i) st.weights[i] /= total;
}

}  // namespace detail

/// Feeds one round of losses (sparse over support positions, entries in
/// [0,1]; missing positions incur zero loss) and refreshes the weights.
inline void wmf_update(WmfState& st, const std::vector<std::pair<int, double>>& loss) {
  for (const auto& [i, v] : loss) {
    if (i < 0 || static_cast<std::size_t>(i) >= st.support.size())
      throw std::invalid_argument("wmf_update: loss index out of range");
    if (v < 0.0 || v > 1.0 || !std::isfinite(v))
      throw std::invalid_argument("wmf_update: loss outside [0,1]");
  }
  double realized = 0.0;
  for (const auto& [i, v] : loss) realized += st.weights[i] * v;
  st.cumulative_alg_loss += realized;
  for (const auto& [i, v] : loss) st.cumulative_loss[i] += v;
  ++st.rounds;
  detail::wmf_recompute_weights(st);
}

// ---------------------------------------------------------------------------
// Optimistic planning with per-round reward functions. Transition statistics
// persist across rounds while the reward changes freely, so the confidence
// width must hold for every bounded value function at once; that is what the
// S log(8e(n+1)) term buys.
// ---------------------------------------------------------------------------

/// log(2SAH/delta) + S log(8e(n+1)).
inline double ucbvi_beta(std::int64_t n, double delta, int S, int A, int H) {
  if (n < 0) throw std::invalid_argument("ucbvi_beta: n must be nonnegative");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ucbvi_beta: delta in (0,1)");
  const double sah = static_cast<double>(S) * A * H;
  return std::log(2.0 * sah / delta) +
         S * std::log(8.0 * std::exp(1.0) * (static_cast<double>(n) + 1.0));
}

/// Sufficient statistics: visit counts, transition counts and reward sums.
struct UcbviStats {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<std::int64_t> n;           // [h][s][a]
  std::vector<std::int64_t> m;           // [h][s][a][s'], h in [0, H-1)
  std::vector<double> reward_sum;        // [h][s][a]

  UcbviStats() = default;
  UcbviStats(int S, int A, int H)
      : num_states(S), num_actions(A), horizon(H),
        n(static_cast<std::size_t>(H) * S * A, 0),
        m(H > 1 ? static_cast<std::size_t>(H - 1) * S * A * S : 0, 0),
        reward_sum(static_cast<std::size_t>(H) * S * A, 0.0) {}

  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  std::size_t m_index(int h, int s, int a, int s2) const {
    return ((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) *
               num_states + s2;
  }

  std::int64_t count(int h, int s, int a) const { return n[sa_index(h, s, a)]; }

  void update(const Episode& ep) {
    if (ep.length() != horizon)
      throw std::invalid_argument("UcbviStats::update: episode length mismatch");
    for (int h = 0; h < horizon; ++h) {
      const std::size_t i = sa_index(h, ep.states[h], ep.actions[h]);
      ++n[i];
      reward_sum[i] += ep.rewards[h];
      if (h + 1 < horizon) ++m[m_index(h, ep.states[h], ep.actions[h], ep.states[h + 1])];
    }
  }

  void add_dataset(const EpisodeDataset& ds) {
    for (std::size_t e = 0; e < ds.size(); ++e)
      for (int h = 0; h < horizon; ++h) {
        const int s = ds.state(e, h), a = ds.action(e, h);
        const std::size_t i = sa_index(h, s, a);
        ++n[i];
        reward_sum[i] += ds.reward(e, h);
        if (h + 1 < horizon) ++m[m_index(h, s, a, ds.state(e, h + 1))];
      }
  }

  void merge(const UcbviStats& other) {
    for (std::size_t i = 0; i < n.size(); ++i) n[i] += other.n[i];
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += other.m[i];
    for (std::size_t i = 0; i < reward_sum.size(); ++i) reward_sum[i] += other.reward_sum[i];
  }

  /// Maximum-likelihood transition probability; uniform when unvisited.
  double p_hat(int h, int s, int a, int s2) const {
    const std::int64_t total = n[sa_index(h, s, a)];
    if (total == 0) return 1.0 / num_states;
    return static_cast<double>(m[m_index(h, s, a, s2)]) / static_cast<double>(total);
  }

  /// Empirical mean reward; zero when unvisited.
  double r_hat(int h, int s, int a) const {
    const std::int64_t total = n[sa_index(h, s, a)];
    if (total == 0) return 0.0;
    return reward_sum[sa_index(h, s, a)] / static_cast<double>(total);
  }

  VisitCounts visit_counts() const {
    VisitCounts vc(num_states, num_actions, horizon);
    vc.n = n;
    return vc;
  }

  std::vector<double> r_hat_array() const {
    std::vector<double> out(n.size(), 0.0);
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
          out[sa_index(h, s, a)] = r_hat(h, s, a);
    return out;
  }

  /// Packages the MLE kernel (uniform rows at unvisited triplets) and the
  /// empirical mean rewards as a model usable by the exact planners.
  TabularMdp empirical_mdp(int initial_state) const {
    TabularMdp model(num_states, num_actions, horizon, initial_state);
    for (int h = 0; h + 1 < horizon; ++h)
      for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
          for (int s2 = 0; s2 < num_states; ++s2)
            model.p(h, s, a, s2) = p_hat(h, s, a, s2);
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
          model.r(h, s, a) = std::clamp(r_hat(h, s, a), 0.0, 1.0);
    return model;
  }
};

/// Rewards must lie in [0,1] with per-episode return at most 1. The check
/// used here is sum_h max_{s,a} r_h(s,a) <= 1, which admits both simplex
/// weight vectors and single-(h,s) indicator rewards.
inline void validate_admissible_reward(const std::vector<double>& reward, int S, int A,
                                       int H) {
  if (reward.size() != static_cast<std::size_t>(H) * S * A)
    throw std::invalid_argument("reward: size mismatch");
  double total = 0.0;
  for (int h = 0; h < H; ++h) {
    double stage_max = 0.0;
    for (int i = 0; i < S * A; ++i) {
      const double v = reward[static_cast<std::size_t>(h) * S * A + i];
      if (v < 0.0 || v > 1.0 || !std::isfinite(v))
        throw std::invalid_argument("reward: entries must lie in [0,1]");
      stage_max = std::max(stage_max, v);
    }
    total += stage_max;
  }
  if (total > 1.0 + 1e-9)
    throw std::invalid_argument("reward: per-episode return may exceed 1");
}

struct UcbviPlan {
  std::vector<double> q_upper;  // [h][s][a], clipped to [0,1]
  Policy policy;
};

namespace detail {

struct UcbviWorkspace {
  std::vector<double> v_next, v_here;
  std::vector<int> greedy;
};

inline void ucbvi_plan_into(const UcbviStats& stats, const std::vector<double>& reward,
                            double delta, double beta_scale, UcbviWorkspace& ws,
                            UcbviPlan& out) {
  const int S = stats.num_states, A = stats.num_actions, H = stats.horizon;
  ws.v_next.assign(S, 0.0);
  ws.v_here.assign(S, 0.0);
  ws.greedy.assign(static_cast<std::size_t>(H) * S, 0);
  out.q_upper.assign(static_cast<std::size_t>(H) * S * A, 0.0);

  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const std::size_t i = stats.sa_index(h, s, a);
        double q;
        if (h == H - 1) {
          q = std::min(reward[i], 1.0);
        } else {
          const std::int64_t cnt = stats.n[i];
          if (cnt == 0) {
            q = 1.0;  // unbounded bonus, represented directly as the clip value
          } else {
            double pv = 0.0, pv2 = 0.0;
            const std::size_t mbase = stats.m_index(h, s, a, 0);
            for (int s2 = 0; s2 < S; ++s2) {
              const double w = static_cast<double>(stats.m[mbase + s2]);
              if (w == 0.0) continue;
              pv += w * ws.v_next[s2];
              pv2 += w * ws.v_next[s2] * ws.v_next[s2];
            }
            const double inv = 1.0 / static_cast<double>(cnt);
            pv *= inv;
            pv2 *= inv;
            const double var = std::max(0.0, pv2 - pv * pv);
            const double beta =
                beta_scale * ucbvi_beta(cnt, delta, S, A, H);
            const double bonus =
                std::max(std::sqrt(8.0 * var * beta * inv), 8.0 * beta * inv);
            q = std::min(reward[i] + pv + bonus, 1.0);
          }
        }
        out.q_upper[i] = q;
        if (q > best) { best = q; best_a = a; }
      }
      ws.v_here[s] = best;
      ws.greedy[static_cast<std::size_t>(h) * S + s] = best_a;
    }
    ws.v_next.swap(ws.v_here);
  }
  out.policy = Policy::deterministic(S, A, H, ws.greedy);
}

}  // namespace detail

/// One optimistic backward pass for the given (known) reward:
///   Qbar_h = min(r_h + Phat Vbar_{h+1} + B_h, 1),  Qbar_H = r_H,
/// with B = max{ sqrt(8 Var(phat, Vbar) beta / n), 8 beta / n } and Qbar = 1
/// wherever n = 0. The returned policy is greedy with lowest-index ties.
inline UcbviPlan ucbvi_plan(const UcbviStats& stats, const std::vector<double>& reward,
                            double delta, double beta_scale = 1.0) {
  validate_admissible_reward(reward, stats.num_states, stats.num_actions, stats.horizon);
  detail::UcbviWorkspace ws;
  UcbviPlan out;
  detail::ucbvi_plan_into(stats, reward, delta, beta_scale, ws, out);
  return out;
}

/// Trajectory bookkeeping; kept as a free function mirror of
/// UcbviStats::update for symmetry with the other learner operations.
inline void ucbvi_update(UcbviStats& stats, const Episode& ep) { stats.update(ep); }

}  // namespace covkit
