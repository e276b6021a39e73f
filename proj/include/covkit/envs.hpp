#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "covkit/mdp.hpp"
#include "covkit/rng.hpp"

namespace covkit {

/// Dirichlet(alpha) transition rows, uniform random reward means, initial
/// state 0. Deterministic given the seed.
inline TabularMdp gen_random_mdp(std::uint64_t seed, int S, int A, int H,
                                 double alpha = 1.0) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gen_random_mdp: alpha must be positive");
  Rng rng = make_rng(seed);
  TabularMdp mdp(S, A, H, /*s1=*/0);
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const std::vector<double> row = dirichlet(rng, S, alpha);
        for (int s2 = 0; s2 < S; ++s2) mdp.p(h, s, a, s2) = row[s2];
      }
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) mdp.r(h, s, a) = uniform01(rng);
  mdp.validate();
  return mdp;
}

/// Transitions independent of the action: p_h(s'|s,a) = p_h(s'|s). On these
/// instances the coverage complexity of the proportional target is exactly
/// the number of actions.
inline TabularMdp gen_contextual_bandit(std::uint64_t seed, int S, int A, int H) {
  Rng rng = make_rng(seed);
  TabularMdp mdp(S, A, H, /*s1=*/0);
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s) {
      const std::vector<double> row = dirichlet(rng, S, 1.0);
      for (int a = 0; a < A; ++a)
        for (int s2 = 0; s2 < S; ++s2) mdp.p(h, s, a, s2) = row[s2];
    }
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) mdp.r(h, s, a) = uniform01(rng);
  mdp.validate();
  return mdp;
}

/// Every transition row lies in the set of near-ergodic distributions
///   { q : max_i q_i <= S^(alpha-1),  min_i q_i >= (1 - S^(beta-1))/(S-1) },
/// which requires 0 < beta < alpha < 1. Rows are sampled by spreading the
/// spare mass over the floor by rejection.
inline TabularMdp gen_ergodic(std::uint64_t seed, int S, int A, int H, double alpha_exp,
                              double beta_exp) {
  if (!(0.0 < beta_exp && beta_exp < alpha_exp && alpha_exp < 1.0))
    throw std::invalid_argument("gen_ergodic: need 0 < beta < alpha < 1");
  if (S < 2) throw std::invalid_argument("gen_ergodic: need at least two states");
  const double cap = std::pow(static_cast<double>(S), alpha_exp - 1.0);
  const double floor = (1.0 - std::pow(static_cast<double>(S), beta_exp - 1.0)) /
                       (S - 1.0);
  const double spare = 1.0 - S * floor;
  if (spare < -1e-12 || cap < floor || S * cap < 1.0 - 1e-12)
    throw std::invalid_argument("gen_ergodic: infeasible (S, alpha, beta) combination");

  Rng rng = make_rng(seed);
  const auto sample_row = [&]() {
    std::vector<double> row(S, floor);
    if (spare <= 0.0) return row;
    for (int tries = 0; tries < 10000; ++tries) {
      std::vector<double> u(S);
      double total = 0.0;
      for (int i = 0; i < S; ++i) { u[i] = uniform01(rng) + 1e-12; total += u[i]; }
      bool ok = true;
      for (int i = 0; i < S; ++i) {
        row[i] = floor + spare * u[i] / total;
        if (row[i] > cap + 1e-15) { ok = false; break; }
      }
      if (ok) return row;
    }
    // deterministic fallback: pack the spare mass greedily under the cap
    std::vector<double> row2(S, floor);
    double rest = spare;
    for (int i = 0; i < S && rest > 0.0; ++i) {
      const double add = std::min(rest, cap - floor);
      row2[i] += add;
      rest -= add;
    }
    return row2;
  };

  TabularMdp mdp(S, A, H, /*s1=*/0);
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const std::vector<double> row = sample_row();
        for (int s2 = 0; s2 < S; ++s2) mdp.p(h, s, a, s2) = row[s2];
      }
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) mdp.r(h, s, a) = uniform01(rng);
  mdp.validate();
  return mdp;
}

/// Complete deterministic tree: the root is the initial state, action a at a
/// depth-h node moves to its a-th child. State indices follow heap order, so
/// the depth-h layer occupies [ (b^h - 1)/(b-1), (b^(h+1) - 1)/(b-1) ).
/// States off their own depth carry self-loop rows. Rewards are uniform
/// random draws.
inline TabularMdp gen_tree_mdp(std::uint64_t seed, int branching, int H) {
  if (branching < 1) throw std::invalid_argument("gen_tree_mdp: branching must be >= 1");
  if (H < 1) throw std::invalid_argument("gen_tree_mdp: horizon must be >= 1");
  std::int64_t S64 = 0, layer = 1;
  for (int d = 0; d < H; ++d) { S64 += layer; layer *= branching; }
  if (S64 > 100000) throw std::invalid_argument("gen_tree_mdp: tree too large");
  const int S = static_cast<int>(S64);
  const int A = branching;

  Rng rng = make_rng(seed);
  TabularMdp mdp(S, A, H, /*s1=*/0);
  // layer_start[d] = index of the first node at depth d
  std::vector<int> layer_start(H + 1, 0);
  for (int d = 1; d <= H; ++d) {
    std::int64_t width = 1;
    for (int i = 0; i < d - 1; ++i) width *= branching;
    layer_start[d] = layer_start[d - 1] + static_cast<int>(width);
  }
  for (int h = 0; h + 1 < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        if (s >= layer_start[h] && s < layer_start[h + 1]) {
          const int offset = s - layer_start[h];
          const int child = layer_start[h + 1] + offset * branching + a;
          mdp.p(h, s, a, child) = 1.0;
        } else {
          mdp.p(h, s, a, s) = 1.0;
        }
      }
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) mdp.r(h, s, a) = uniform01(rng);
  mdp.validate();
  return mdp;
}

/// Instance separating policy gaps from value gaps. From the initial state,
/// action 0 pays Delta and enters a small block of log2(S) states with
/// uniform dynamics and zero reward; every other action pays nothing and
/// enters a deterministic zero-reward block of S - log2(S) states. The two
/// blocks together hold S states; with the initial state the MDP has S+1.
/// The unique optimal first action is 0, and a policy's gap is Delta times
/// the probability it leaves the initial state any other way.
inline TabularMdp gen_two_block(double delta_gap, int S, int A, int H) {
  if (!(delta_gap > 0.0 && delta_gap <= 1.0))
    throw std::invalid_argument("gen_two_block: Delta in (0,1]");
  if (A < 2 || H < 2) throw std::invalid_argument("gen_two_block: need A >= 2, H >= 2");
  const int s_rich = std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(S)))));
  const int s_poor = S - s_rich;
  if (s_poor < 1) throw std::invalid_argument("gen_two_block: S too small");

  const int total = S + 1;
  const int rich0 = 1;                // rich block: [1, 1 + s_rich)
  const int poor0 = 1 + s_rich;       // poor block: [poor0, poor0 + s_poor)
  TabularMdp mdp(total, A, H, /*s1=*/0);

  for (int h = 0; h + 1 < H; ++h) {
    for (int a = 0; a < A; ++a) {
      if (a == 0 && h == 0) {
        for (int i = 0; i < s_rich; ++i) mdp.p(0, 0, 0, rich0 + i) = 1.0 / s_rich;
      } else if (h == 0) {
        mdp.p(0, 0, a, poor0) = 1.0;
      } else {
        mdp.p(h, 0, a, 0) = 1.0;  // initial state is never revisited
      }
    }
    for (int i = 0; i < s_rich; ++i)
      for (int a = 0; a < A; ++a)
        for (int j = 0; j < s_rich; ++j)
          mdp.p(h, rich0 + i, a, rich0 + j) = 1.0 / s_rich;
    for (int i = 0; i < s_poor; ++i)
      for (int a = 0; a < A; ++a) {
        const int next = poor0 + (i + a + 1) % s_poor;
        mdp.p(h, poor0 + i, a, next) = 1.0;
      }
  }
  for (int a = 0; a < A; ++a) mdp.r(0, 0, a) = (a == 0) ? delta_gap : 0.0;
  mdp.validate();
  return mdp;
}

}  // namespace covkit
