#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "covkit/rng.hpp"

namespace covkit {

// Index conventions used throughout: stages h in [0, H), states s in [0, S),
// actions a in [0, A). Stage-indexed arrays are flat row-major [h][s][a].
// Transitions exist for h in [0, H-1): the last stage has no successor.

constexpr double kRowStochasticTol = 1e-9;
constexpr double kPolicyRowTol = 1e-12;
constexpr double kOccupancyMassTol = 1e-9;
constexpr double kNavigationTol = 1e-8;

/// Finite-horizon tabular MDP with Bernoulli rewards.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int initial_state = 0;
  std::vector<double> transitions;   // [h][s][a][s'], h in [0, H-1)
  std::vector<double> reward_means;  // [h][s][a], each in [0,1]

  TabularMdp() = default;
  TabularMdp(int S, int A, int H, int s1)
      : num_states(S),
        num_actions(A),
        horizon(H),
        initial_state(s1),
        transitions(H > 1 ? static_cast<std::size_t>(H - 1) * S * A * S : 0, 0.0),
        reward_means(static_cast<std::size_t>(H) * S * A, 0.0) {}

  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  std::size_t p_index(int h, int s, int a, int s2) const {
    return ((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) *
               num_states + s2;
  }

  double p(int h, int s, int a, int s2) const { return transitions[p_index(h, s, a, s2)]; }
  double& p(int h, int s, int a, int s2) { return transitions[p_index(h, s, a, s2)]; }
  double r(int h, int s, int a) const { return reward_means[sa_index(h, s, a)]; }
  double& r(int h, int s, int a) { return reward_means[sa_index(h, s, a)]; }

  std::size_t num_triplets() const {
    return static_cast<std::size_t>(horizon) * num_states * num_actions;
  }

  /// Checks dimensions, row-stochasticity (within 1e-9) and reward ranges.
  void validate() const {
    if (num_states <= 0 || num_actions <= 0 || horizon <= 0)
      throw std::invalid_argument("TabularMdp: dimensions must be positive");
    if (initial_state < 0 || initial_state >= num_states)
      throw std::invalid_argument("TabularMdp: initial state out of range");
    const std::size_t want_p =
        horizon > 1 ? static_cast<std::size_t>(horizon - 1) * num_states * num_actions * num_states : 0;
    if (transitions.size() != want_p)
      throw std::invalid_argument("TabularMdp: transition array size mismatch");
    if (reward_means.size() != num_triplets())
      throw std::invalid_argument("TabularMdp: reward array size mismatch");
    for (int h = 0; h + 1 < horizon; ++h)
      for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
          double row = 0.0;
          for (int s2 = 0; s2 < num_states; ++s2) {
            const double v = p(h, s, a, s2);
            if (v < 0.0 || !std::isfinite(v))
              throw std::invalid_argument("TabularMdp: negative or non-finite transition");
            row += v;
          }
          if (std::abs(row - 1.0) > kRowStochasticTol)
            throw std::invalid_argument("TabularMdp: transition row not stochastic at h=" +
                                        std::to_string(h) + " s=" + std::to_string(s) +
                                        " a=" + std::to_string(a));
        }
    for (double v : reward_means)
      if (v < 0.0 || v > 1.0 || !std::isfinite(v))
        throw std::invalid_argument("TabularMdp: reward mean outside [0,1]");
  }
};

/// Stage-indexed policy. Deterministic policies are stored as point masses.
struct Policy {
  enum class Kind { Deterministic, Stochastic };

  Kind kind = Kind::Stochastic;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<double> action_probs;  // [h][s][a]

  Policy() = default;
  Policy(Kind k, int S, int A, int H)
      : kind(k), num_states(S), num_actions(A), horizon(H),
        action_probs(static_cast<std::size_t>(H) * S * A, 0.0) {}

  std::size_t idx(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  double pi(int h, int s, int a) const { return action_probs[idx(h, s, a)]; }
  double& pi(int h, int s, int a) { return action_probs[idx(h, s, a)]; }

  /// Most probable action (the action of a deterministic policy).
  int action(int h, int s) const {
    int best = 0;
    double best_p = pi(h, s, 0);
    for (int a = 1; a < num_actions; ++a)
      if (pi(h, s, a) > best_p) { best_p = pi(h, s, a); best = a; }
    return best;
  }

  static Policy uniform(int S, int A, int H) {
    Policy out(Kind::Stochastic, S, A, H);
    const double w = 1.0 / A;
    for (auto& v : out.action_probs) v = w;
    return out;
  }

  /// actions is flat [h][s].
  static Policy deterministic(int S, int A, int H, const std::vector<int>& actions) {
    if (actions.size() != static_cast<std::size_t>(S) * H)
      throw std::invalid_argument("Policy::deterministic: action table size mismatch");
    Policy out(Kind::Deterministic, S, A, H);
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s) {
        const int a = actions[static_cast<std::size_t>(h) * S + s];
        if (a < 0 || a >= A) throw std::invalid_argument("Policy::deterministic: action out of range");
        out.pi(h, s, a) = 1.0;
      }
    return out;
  }

  void validate() const {
    if (action_probs.size() != static_cast<std::size_t>(horizon) * num_states * num_actions)
      throw std::invalid_argument("Policy: array size mismatch");
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states; ++s) {
        double row = 0.0;
        for (int a = 0; a < num_actions; ++a) {
          const double v = pi(h, s, a);
          if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("Policy: negative action probability");
          row += v;
        }
        if (std::abs(row - 1.0) > kPolicyRowTol)
          throw std::invalid_argument("Policy: action row does not sum to 1");
      }
  }
};

/// Per-stage state-action mass. `normalized` distinguishes distributions
/// (mass 1 per stage) from unnormalized flows measured in episode counts.
struct Occupancy {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  bool normalized = true;
  std::vector<double> rho;  // [h][s][a]

  Occupancy() = default;
  Occupancy(int S, int A, int H, bool norm = true)
      : num_states(S), num_actions(A), horizon(H), normalized(norm),
        rho(static_cast<std::size_t>(H) * S * A, 0.0) {}

  std::size_t idx(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  double at(int h, int s, int a) const { return rho[idx(h, s, a)]; }
  double& at(int h, int s, int a) { return rho[idx(h, s, a)]; }

  double stage_mass(int h) const {
    double m = 0.0;
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) m += at(h, s, a);
    return m;
  }
  double state_mass(int h, int s) const {
    double m = 0.0;
    for (int a = 0; a < num_actions; ++a) m += at(h, s, a);
    return m;
  }
};

/// Verifies the occupancy constraints against an MDP: nonnegativity,
/// stage-1 mass confined to the initial state, per-stage normalization when
/// flagged, and the navigation (flow conservation) identities.
inline void check_occupancy(const TabularMdp& mdp, const Occupancy& occ,
                            double mass_tol = kOccupancyMassTol,
                            double nav_tol = kNavigationTol) {
  if (occ.num_states != mdp.num_states || occ.num_actions != mdp.num_actions ||
      occ.horizon != mdp.horizon)
    throw std::invalid_argument("check_occupancy: dimension mismatch");
  for (double v : occ.rho)
    if (v < -1e-12 || !std::isfinite(v))
      throw std::invalid_argument("check_occupancy: negative mass");
  for (int s = 0; s < mdp.num_states; ++s)
    if (s != mdp.initial_state && occ.state_mass(0, s) > mass_tol)
      throw std::invalid_argument("check_occupancy: stage-1 mass off the initial state");
  if (occ.normalized)
    for (int h = 0; h < mdp.horizon; ++h)
      if (std::abs(occ.stage_mass(h) - 1.0) > mass_tol)
        throw std::invalid_argument("check_occupancy: stage mass not normalized");
  for (int h = 1; h < mdp.horizon; ++h)
    for (int s = 0; s < mdp.num_states; ++s) {
      double inflow = 0.0;
      for (int s2 = 0; s2 < mdp.num_states; ++s2)
        for (int a2 = 0; a2 < mdp.num_actions; ++a2)
          inflow += occ.at(h - 1, s2, a2) * mdp.p(h - 1, s2, a2, s);
      const double here = occ.state_mass(h, s);
      const double scale = occ.normalized ? 1.0 : std::max(1.0, occ.stage_mass(0));
      if (std::abs(here - inflow) > nav_tol * scale)
        throw std::invalid_argument("check_occupancy: navigation constraint violated at h=" +
                                    std::to_string(h) + " s=" + std::to_string(s));
    }
}

/// One trajectory. Rewards are the observed Bernoulli draws, in {0,1}.
struct Episode {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;

  int length() const { return static_cast<int>(states.size()); }
};

/// Contiguous storage for a set of fixed-horizon episodes. Keeps dataset
/// handling cheap when runs collect millions of trajectories.
struct EpisodeDataset {
  int horizon = 0;
  std::vector<std::int32_t> states;
  std::vector<std::int32_t> actions;
  std::vector<std::uint8_t> rewards;

  EpisodeDataset() = default;
  explicit EpisodeDataset(int H) : horizon(H) {}

  std::size_t size() const {
    return horizon > 0 ? states.size() / horizon : 0;
  }
  bool empty() const { return size() == 0; }

  void append(const Episode& ep) {
    if (horizon == 0) horizon = ep.length();
    if (ep.length() != horizon)
      throw std::invalid_argument("EpisodeDataset: episode length mismatch");
    for (int h = 0; h < horizon; ++h) {
      states.push_back(static_cast<std::int32_t>(ep.states[h]));
      actions.push_back(static_cast<std::int32_t>(ep.actions[h]));
      rewards.push_back(ep.rewards[h] > 0.5 ? 1 : 0);
    }
  }

  void append_from(const EpisodeDataset& other, std::size_t i) {
    if (horizon == 0) horizon = other.horizon;
    const std::size_t base = i * other.horizon;
    for (int h = 0; h < other.horizon; ++h) {
      states.push_back(other.states[base + h]);
      actions.push_back(other.actions[base + h]);
      rewards.push_back(other.rewards[base + h]);
    }
  }

  int state(std::size_t i, int h) const { return states[i * horizon + h]; }
  int action(std::size_t i, int h) const { return actions[i * horizon + h]; }
  double reward(std::size_t i, int h) const { return rewards[i * horizon + h]; }

  Episode episode(std::size_t i) const {
    Episode ep;
    ep.states.resize(horizon);
    ep.actions.resize(horizon);
    ep.rewards.resize(horizon);
    for (int h = 0; h < horizon; ++h) {
      ep.states[h] = state(i, h);
      ep.actions[h] = action(i, h);
      ep.rewards[h] = reward(i, h);
    }
    return ep;
  }
};

/// Visit counters n[h][s][a].
struct VisitCounts {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<std::int64_t> n;  // [h][s][a]

  VisitCounts() = default;
  VisitCounts(int S, int A, int H)
      : num_states(S), num_actions(A), horizon(H),
        n(static_cast<std::size_t>(H) * S * A, 0) {}

  std::size_t idx(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  std::int64_t at(int h, int s, int a) const { return n[idx(h, s, a)]; }
  std::int64_t& at(int h, int s, int a) { return n[idx(h, s, a)]; }

  void add_episode(const Episode& ep) {
    for (int h = 0; h < horizon; ++h) ++at(h, ep.states[h], ep.actions[h]);
  }
  void add_dataset(const EpisodeDataset& ds) {
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (int h = 0; h < horizon; ++h) ++at(h, ds.state(i, h), ds.action(i, h));
  }

  std::int64_t stage_total(int h) const {
    std::int64_t t = 0;
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) t += at(h, s, a);
    return t;
  }

  /// n >= c entrywise, compared on reals.
  bool dominates(const std::vector<double>& c) const {
    for (std::size_t i = 0; i < n.size(); ++i)
      if (static_cast<double>(n[i]) < c[i]) return false;
    return true;
  }
};

/// Thrown when a sampling loop exceeds its configured round budget.
class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace covkit
