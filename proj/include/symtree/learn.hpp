#pragma once

// End-to-end learning: build the MILP, seed it, solve it, decode the tree.

#include <optional>
#include <utility>
#include <vector>

#include "symtree/baselines.hpp"
#include "symtree/formulation.hpp"
#include "symtree/solver.hpp"
#include "symtree/tree.hpp"

namespace symtree {

struct FitOptions {
  HyperParams hp;
  SolverConfig solver;
  bool warm_start = true;
  // Re-centre each split between the two sides it separates. Leaves, routing
  // and objective are unchanged.
  bool polish = true;
};

struct FitResult {
  BuildResult problem;
  Assignment assignment;
  BnbStats stats;
  std::optional<WarmStart> warm;
  std::optional<TreeSolution> solution;
  bool polished = false;

  SolveStatus status() const { return assignment.status; }
  bool has_tree() const { return solution.has_value(); }
  const SymbolicTree& tree() const { return solution.value().tree; }
};

namespace detail {

inline bool in_subtree(int node, int root) {
  while (node > root) node /= 2;
  return node == root;
}

}  // namespace detail

/// Moves every split to the max-margin separator of its own partition, using
/// the same active basis functions, scaled as far as the coefficient box
/// allows. Returns false (and leaves `x` alone) if any check fails.
inline bool polish_splits(const BuildResult& br, const TreeSolution& sol, Assignment& x,
                          const SolverConfig& cfg = {}) {
  const auto& v = br.map;
  std::vector<double> values = x.values;
  bool changed = false;
  for (int n = 1; n <= br.nodes.count(); ++n) {
    if (sol.tree.node(n).kind != NodeKind::kBranch) continue;
    std::vector<int> support;
    for (std::size_t k = 0; k < br.branch.size(); ++k) {
      const bool on = !v.omega[n].empty() && br.model.valid(v.omega[n][k])
                          ? x[v.omega[n][k]] > 0.5
                          : sol.tree.node(n).a[k] != 0.0;
      if (on) support.push_back(static_cast<int>(k));
    }
    if (support.empty()) continue;
    std::vector<int> rows, side;
    for (std::size_t i = 0; i < sol.routing.size(); ++i) {
      const int leaf = sol.routing[i];
      if (detail::in_subtree(leaf, 2 * n)) {
        rows.push_back(static_cast<int>(i));
        side.push_back(0);
      } else if (detail::in_subtree(leaf, 2 * n + 1)) {
        rows.push_back(static_cast<int>(i));
        side.push_back(1);
      }
    }
    if (rows.empty()) continue;
    const auto sep = detail::fit_separator(br.phi_b, rows, side, support);
    if (!sep.separable) continue;
    const double s = detail::max_scale(sep.a, sep.b, br.hp);
    if (!std::isfinite(s) || s * sep.margin < br.hp.epsilon) continue;
    for (std::size_t k = 0; k < br.branch.size(); ++k) {
      values[static_cast<std::size_t>(v.a[n][k].value)] = s * sep.a[k];
    }
    values[static_cast<std::size_t>(v.b[n].value)] = s * sep.b;
    changed = true;
  }
  if (!changed) return false;
  if (!check_feasibility(br.model, values, cfg.feas_tol, cfg.int_tol).feasible) return false;
  const double obj = objective_value(br.model, values);
  if (std::fabs(obj - x.objective) > 1e-9 * std::max(1.0, std::fabs(x.objective))) return false;
  x.values = std::move(values);
  x.objective = obj;
  return true;
}

inline FitResult fit_tree(const Dataset& data, const BasisSet& kb, const BasisSet& kf,
                          const FitOptions& opt = {}) {
  opt.solver.validate();
  FitResult r;
  r.problem = build(data, kb, kf, opt.hp);
  std::optional<Assignment> start;
  if (opt.warm_start) {
    r.warm = find_warm_start(data, r.problem, opt.solver);
    if (r.warm) start = r.warm->assignment;
  }
  auto [x, stats] = solve_milp(r.problem.model, opt.solver, start);
  r.assignment = std::move(x);
  r.stats = std::move(stats);
  if (!r.assignment.has_solution()) return r;
  r.solution = decode(r.assignment, r.problem);
  if (opt.polish && polish_splits(r.problem, *r.solution, r.assignment, opt.solver)) {
    r.solution = decode(r.assignment, r.problem);
    r.polished = true;
  }
  return r;
}

}  // namespace symtree
