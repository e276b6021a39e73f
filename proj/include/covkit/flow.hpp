#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "covkit/dp.hpp"
#include "covkit/lp.hpp"
#include "covkit/mdp.hpp"

namespace covkit {

/// Required sample counts per (h,s,a). The support X is the set of triplets
/// with a strictly positive requirement.
struct TargetFunction {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<double> c;  // [h][s][a]

  TargetFunction() = default;
  TargetFunction(int S, int A, int H)
      : num_states(S), num_actions(A), horizon(H),
        c(static_cast<std::size_t>(H) * S * A, 0.0) {}

  static TargetFunction uniform(int S, int A, int H, double value) {
    TargetFunction t(S, A, H);
    for (auto& v : t.c) v = value;
    return t;
  }

  std::size_t idx(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  double at(int h, int s, int a) const { return c[idx(h, s, a)]; }
  double& at(int h, int s, int a) { return c[idx(h, s, a)]; }

  void validate() const {
    if (c.size() != static_cast<std::size_t>(horizon) * num_states * num_actions)
      throw std::invalid_argument("TargetFunction: array size mismatch");
    for (double v : c)
      if (v < 0.0 || !std::isfinite(v))
        throw std::invalid_argument("TargetFunction: entries must be nonnegative and finite");
  }

  /// Flat indices of the support X.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] > 0.0) out.push_back(i);
    return out;
  }
  bool support_empty() const {
    for (double v : c)
      if (v > 0.0) return false;
    return true;
  }

  /// min over the support, floored at 1.
  double c_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : c)
      if (v > 0.0) m = std::min(m, v);
    if (!std::isfinite(m)) return 1.0;
    return std::max(m, 1.0);
  }
  double c_max() const {
    double m = 0.0;
    for (double v : c) m = std::max(m, v);
    return m;
  }
};

enum class FlowStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Optimal: return "optimal";
    case FlowStatus::Infeasible: return "infeasible";
    case FlowStatus::Unbounded: return "unbounded";
  }
  return "?";
}

namespace detail {

inline FlowStatus from_lp(lp::Status s) {
  switch (s) {
    case lp::Status::Optimal: return FlowStatus::Optimal;
    case lp::Status::Infeasible: return FlowStatus::Infeasible;
    case lp::Status::Unbounded: return FlowStatus::Unbounded;
  }
  return FlowStatus::Infeasible;
}

/// Shared variable layout for occupancy/flow programs. Stage 0 carries
/// variables only at the initial state; all other stage-0 entries are
/// structurally zero.
struct OccupancyVars {
  int S, A, H, s1;

  explicit OccupancyVars(const TabularMdp& m)
      : S(m.num_states), A(m.num_actions), H(m.horizon), s1(m.initial_state) {}

  int count() const { return A + (H - 1) * S * A; }

  /// Variable index, or -1 for structurally-zero entries.
  int var(int h, int s, int a) const {
    if (h == 0) return s == s1 ? a : -1;
    return A + ((h - 1) * S + s) * A + a;
  }

  /// Flow conservation: for every h >= 1 and state s,
  /// sum_a x_h(s,a) - sum_{s',a'} p_{h-1}(s|s',a') x_{h-1}(s',a') = 0.
  void add_navigation(const TabularMdp& mdp, lp::Problem& prob) const {
    for (int h = 1; h < H; ++h)
      for (int s = 0; s < S; ++s) {
        std::vector<std::pair<int, double>> terms;
        for (int a = 0; a < A; ++a) terms.emplace_back(var(h, s, a), 1.0);
        for (int s2 = 0; s2 < S; ++s2)
          for (int a2 = 0; a2 < A; ++a2) {
            const int v = var(h - 1, s2, a2);
            if (v < 0) continue;
            const double p = mdp.p(h - 1, s2, a2, s);
            if (p != 0.0) terms.emplace_back(v, -p);
          }
        prob.add_constraint(terms, lp::Relation::Eq, 0.0);
      }
  }

  Occupancy unpack(const std::vector<double>& x, bool normalized) const {
    Occupancy occ(S, A, H, normalized);
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          const int v = var(h, s, a);
          occ.at(h, s, a) = v < 0 ? 0.0 : std::max(0.0, x[v]);
        }
    return occ;
  }
};

}  // namespace detail

/// Result of the coverage-complexity program. `flow` is the optimal
/// unnormalized visit allocation eta*, `coverage` the distribution eta*/value.
struct FlowSolution {
  FlowStatus status = FlowStatus::Infeasible;
  double value = 0.0;
  Occupancy flow;
  Occupancy coverage;
};

/// Coverage complexity phi*(c): the minimum-value flow dominating c.
///
///   minimize sum_a eta_1(s1, a)
///   s.t.     navigation constraints, eta >= c, eta >= 0.
///
/// Equals inf over state-action distributions rho of max_X c/rho. Targets
/// supported on unreachable triplets are rejected as infeasible before the
/// solver runs.
inline FlowSolution phi_star(const TabularMdp& mdp, const TargetFunction& target) {
  target.validate();
  if (target.num_states != mdp.num_states || target.num_actions != mdp.num_actions ||
      target.horizon != mdp.horizon)
    throw std::invalid_argument("phi_star: dimension mismatch");

  FlowSolution out;
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  if (target.support_empty()) {
    out.status = FlowStatus::Optimal;
    out.value = 0.0;
    out.flow = Occupancy(S, A, H, /*normalized=*/false);
    out.coverage = visitation_distribution(mdp, Policy::uniform(S, A, H));
    return out;
  }

  // Unreachable support would make the flow program infeasible; detect it
  // up front so the caller gets a clean status rather than solver artifacts.
  std::vector<double> reach(static_cast<std::size_t>(H) * S, -1.0);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        if (target.at(h, s, a) > 0.0) {
          auto& w = reach[static_cast<std::size_t>(h) * S + s];
          if (w < 0.0) w = max_reach(mdp, h, s);
          if (w == 0.0) {
            out.status = FlowStatus::Infeasible;
            return out;
          }
        }

  detail::OccupancyVars vars(mdp);
  lp::Problem prob(vars.count());
  std::vector<double> obj(vars.count(), 0.0);
  for (int a = 0; a < A; ++a) obj[vars.var(0, mdp.initial_state, a)] = 1.0;
  prob.set_objective(obj, /*maximize=*/false);
  vars.add_navigation(mdp, prob);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double need = target.at(h, s, a);
        if (need > 0.0)
          prob.add_constraint({{vars.var(h, s, a), 1.0}}, lp::Relation::Ge, need);
      }

  const lp::Result res = prob.solve();
  out.status = detail::from_lp(res.status);
  if (out.status != FlowStatus::Optimal) return out;
  out.value = res.objective;
  out.flow = vars.unpack(res.x, /*normalized=*/false);
  out.coverage = Occupancy(S, A, H, /*normalized=*/true);
  if (out.value > 0.0)
    for (std::size_t i = 0; i < out.flow.rho.size(); ++i)
      out.coverage.rho[i] = out.flow.rho[i] / out.value;
  return out;
}

/// The chain of coverage bounds b1 <= phi*(c) <= b2 <= b3:
///   b1 = max_h sum_{s,a} c_h(s,a)
///   b2 = sum_h inf_rho max_{s,a} c_h(s,a) / rho_h(s,a)   (per-stage programs)
///   b3 = sum_{h,s,a} c_h(s,a) / max_reach(h,s,a)
/// b2/b3 are infinite when the support contains unreachable triplets.
struct CoverageBounds {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  bool finite = true;
};

inline CoverageBounds coverage_bounds(const TabularMdp& mdp, const TargetFunction& target) {
  target.validate();
  CoverageBounds out;
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;

  for (int h = 0; h < H; ++h) {
    double stage = 0.0;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) stage += target.at(h, s, a);
    out.b1 = std::max(out.b1, stage);
  }

  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      double w = -1.0;
      for (int a = 0; a < A; ++a) {
        const double need = target.at(h, s, a);
        if (need == 0.0) continue;
        if (w < 0.0) w = max_reach(mdp, h, s);
        if (w == 0.0) {
          out.finite = false;
          out.b2 = out.b3 = std::numeric_limits<double>::infinity();
          return out;
        }
        out.b3 += need / w;
      }
    }

  for (int h = 0; h < H; ++h) {
    TargetFunction stage(S, A, H);
    bool any = false;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double need = target.at(h, s, a);
        if (need > 0.0) { stage.at(h, s, a) = need; any = true; }
      }
    if (!any) continue;
    const FlowSolution sol = phi_star(mdp, stage);
    if (sol.status != FlowStatus::Optimal)
      throw std::runtime_error("coverage_bounds: per-stage program failed");
    out.b2 += sol.value;
  }
  return out;
}

/// Concentrability of a data distribution:
///   max over (h,s,a) of max_reach(h,s,a) / rho_h(s,a),
/// skipping unreachable triplets. A reachable triplet with zero mass makes
/// the coefficient infinite.
inline double concentrability(const TabularMdp& mdp, const Occupancy& rho) {
  if (!rho.normalized)
    throw std::invalid_argument("concentrability: occupancy must be normalized");
  if (rho.num_states != mdp.num_states || rho.num_actions != mdp.num_actions ||
      rho.horizon != mdp.horizon)
    throw std::invalid_argument("concentrability: dimension mismatch");
  double worst = 0.0;
  for (int h = 0; h < mdp.horizon; ++h)
    for (int s = 0; s < mdp.num_states; ++s) {
      const double w = max_reach(mdp, h, s);
      if (w == 0.0) continue;
      for (int a = 0; a < mdp.num_actions; ++a) {
        const double mass = rho.at(h, s, a);
        if (mass <= 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, w / mass);
      }
    }
  return worst;
}

struct ConstrainedValue {
  FlowStatus status = FlowStatus::Infeasible;
  double value = 0.0;
  Occupancy occupancy;
};

namespace detail {

/// Common builder for the capped occupancy programs: rho in Omega(model),
/// rho_h(s,a) <= 2^{-cap_k} n_h(s,a) when cap_k is set, and
/// sum rho r_hat >= value_floor when the floor is set.
inline void build_capped_omega(const TabularMdp& model, const VisitCounts& counts,
                               std::optional<int> cap_k, const OccupancyVars& vars,
                               lp::Problem& prob) {
  std::vector<std::pair<int, double>> init;
  for (int a = 0; a < model.num_actions; ++a)
    init.emplace_back(vars.var(0, model.initial_state, a), 1.0);
  prob.add_constraint(init, lp::Relation::Eq, 1.0);
  vars.add_navigation(model, prob);
  if (cap_k) {
    const double scale = std::ldexp(1.0, -*cap_k);
    for (int h = 0; h < model.horizon; ++h)
      for (int s = 0; s < model.num_states; ++s)
        for (int a = 0; a < model.num_actions; ++a) {
          const int v = vars.var(h, s, a);
          if (v < 0) continue;
          prob.add_constraint({{v, 1.0}}, lp::Relation::Le,
                              scale * static_cast<double>(counts.at(h, s, a)));
        }
  }
}

}  // namespace detail

/// Best estimated return over distributions that are well covered by the
/// data:  max sum rho r_hat  over  rho in Omega(model), rho <= 2^{-k} n.
/// Infeasible status means no valid distribution satisfies the caps.
inline ConstrainedValue constrained_best_value(const TabularMdp& model,
                                               const std::vector<double>& r_hat,
                                               const VisitCounts& counts, int k) {
  if (r_hat.size() != model.num_triplets())
    throw std::invalid_argument("constrained_best_value: reward size mismatch");
  detail::OccupancyVars vars(model);
  lp::Problem prob(vars.count());
  std::vector<double> obj(vars.count(), 0.0);
  for (int h = 0; h < model.horizon; ++h)
    for (int s = 0; s < model.num_states; ++s)
      for (int a = 0; a < model.num_actions; ++a) {
        const int v = vars.var(h, s, a);
        if (v >= 0) obj[v] = r_hat[model.sa_index(h, s, a)];
      }
  prob.set_objective(obj, /*maximize=*/true);
  detail::build_capped_omega(model, counts, k, vars, prob);

  const lp::Result res = prob.solve();
  ConstrainedValue out;
  out.status = detail::from_lp(res.status);
  if (out.status != FlowStatus::Optimal) return out;
  out.value = res.objective;
  out.occupancy = vars.unpack(res.x, /*normalized=*/true);
  return out;
}

struct ConstrainedOccupancy {
  FlowStatus status = FlowStatus::Infeasible;
  double value = 0.0;
};

/// Largest mass any active distribution can place on one triplet:
///   max rho_h(s,a)  over  rho in Omega(model),
///                         sum rho r_hat >= value_floor (when set),
///                         rho <= 2^{-cap_k} n (when set).
/// Infeasible status signals an empty active set.
inline ConstrainedOccupancy constrained_max_occupancy(
    const TabularMdp& model, const std::vector<double>& r_hat, const VisitCounts& counts,
    std::optional<int> cap_k, std::optional<double> value_floor, int h, int s, int a) {
  if (r_hat.size() != model.num_triplets())
    throw std::invalid_argument("constrained_max_occupancy: reward size mismatch");
  detail::OccupancyVars vars(model);
  lp::Problem prob(vars.count());
  const int target_var = vars.var(h, s, a);
  std::vector<double> obj(vars.count(), 0.0);
  if (target_var >= 0) obj[target_var] = 1.0;
  prob.set_objective(obj, /*maximize=*/true);
  detail::build_capped_omega(model, counts, cap_k, vars, prob);
  if (value_floor && std::isfinite(*value_floor)) {
    std::vector<std::pair<int, double>> terms;
    for (int hh = 0; hh < model.horizon; ++hh)
      for (int ss = 0; ss < model.num_states; ++ss)
        for (int aa = 0; aa < model.num_actions; ++aa) {
          const int v = vars.var(hh, ss, aa);
          if (v >= 0) terms.emplace_back(v, r_hat[model.sa_index(hh, ss, aa)]);
        }
    prob.add_constraint(terms, lp::Relation::Ge, *value_floor);
  }

  const lp::Result res = prob.solve();
  ConstrainedOccupancy out;
  out.status = detail::from_lp(res.status);
  if (out.status != FlowStatus::Optimal) return out;
  out.value = target_var >= 0 ? res.objective : 0.0;
  return out;
}

}  // namespace covkit
