#pragma once

// LP relaxations, branch-and-bound and an enumeration oracle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "symtree/lp/simplex.hpp"
#include "symtree/milp.hpp"

namespace symtree {

enum class BranchingRule { kStructuralPriority, kMostFractional };
enum class NodeSelection { kBestBound, kDepthFirstDive };

struct SolverConfig {
  double abs_gap = 1e-6;
  double rel_gap = 1e-4;
  double feas_tol = 1e-7;
  double int_tol = 1e-6;
  std::int64_t node_limit = 0;  // 0 = unlimited
  double time_limit = 0.0;      // seconds, 0 = unlimited
  BranchingRule branching = BranchingRule::kStructuralPriority;
  NodeSelection selection = NodeSelection::kBestBound;
  std::uint64_t seed = 0;
  bool verbose = false;
  std::ostream* log = nullptr;
  std::int64_t log_every = 1000;

  void validate() const {
    if (!(abs_gap > 0) || !(rel_gap > 0) || !(feas_tol > 0) || !(int_tol > 0)) {
      throw std::invalid_argument("solver tolerances must be positive");
    }
    if (node_limit < 0 || time_limit < 0) {
      throw std::invalid_argument("solver limits must be positive or unset");
    }
  }
};

struct BnbStats {
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;
  double incumbent = kInf;
  double best_bound = -kInf;
  double wall_time = 0.0;
  bool warm_start_used = false;
  bool warm_start_rejected = false;
  std::int64_t incumbent_updates = 0;
  std::vector<double> bound_history;

  friend bool operator==(const BnbStats& a, const BnbStats& b) {
    return a.nodes == b.nodes && a.lp_iterations == b.lp_iterations &&
           a.incumbent == b.incumbent && a.best_bound == b.best_bound;
  }
};

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline lp::LpOptions lp_options(const SolverConfig& cfg) {
  lp::LpOptions o;
  o.primal_tol = std::min(1e-9, cfg.feas_tol * 1e-2);
  return o;
}

inline bool is_integral(const MilpModel& m, const std::vector<double>& x, double tol) {
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    if (m.variable(j).integrality == Integrality::kBinary &&
        std::fabs(x[j] - std::round(x[j])) > tol) {
      return false;
    }
  }
  return true;
}

inline bool bounds_consistent(const MilpModel& m) {
  for (const auto& v : m.variables()) {
    if (v.lower > v.upper) return false;
  }
  return true;
}

}  // namespace detail

/// LP relaxation (integrality ignored).
inline Assignment solve_lp(const MilpModel& model, const SolverConfig& config = {}) {
  Assignment out;
  if (!detail::bounds_consistent(model)) {
    out.status = SolveStatus::kInfeasible;
    return out;
  }
  auto opts = detail::lp_options(config);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) opts.scale = false;
    lp::LpSolver lp(model, opts);
    const SolveStatus st = lp.solve();
    if (st == SolveStatus::kInfeasible || st == SolveStatus::kUnbounded ||
        st == SolveStatus::kLimitReached) {
      out.status = st;
      return out;
    }
    if (st != SolveStatus::kOptimal) continue;
    auto x = lp.primal();
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = std::clamp(x[j], model.variable(j).lower, model.variable(j).upper);
    }
    const auto report = check_feasibility(model, x, config.feas_tol, 1.0);
    if (!report.feasible) continue;
    out.values = std::move(x);
    out.objective = objective_value(model, out.values);
    out.status = SolveStatus::kOptimal;
    return out;
  }
  out.status = SolveStatus::kNumericalFailure;
  return out;
}

namespace detail {

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& model, const SolverConfig& cfg)
      : model_(model), cfg_(cfg), lp_(model, lp_options(cfg)) {
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
      if (model.variable(j).integrality == Integrality::kBinary) binaries_.push_back(j);
    }
  }

  std::pair<Assignment, BnbStats> run(const std::optional<Assignment>& warm) {
    t0_ = std::chrono::steady_clock::now();
    if (warm && warm->has_solution()) {
      std::vector<double> x = warm->values;
      if (x.size() == model_.num_variables() &&
          check_feasibility(model_, x, cfg_.feas_tol, cfg_.int_tol).feasible) {
        for (std::size_t j : binaries_) x[j] = std::round(x[j]);
        accept_incumbent(x);
        stats_.warm_start_used = true;
      } else {
        stats_.warm_start_rejected = true;
      }
    }

    Assignment result;
    if (!bounds_consistent(model_)) {
      result.status = SolveStatus::kInfeasible;
      return finish(result, true);
    }

    auto root = std::make_shared<Node>();
    root->bound = -kInf;
    root->id = next_id_++;
    bool limit = false;
    bool numerical = false;
    bool unbounded = false;

    // The first node is processed directly; afterwards nodes come from the
    // open set (best bound) or from the dive stack while no incumbent exists.
    auto& dive = dive_;
    dive.push_back(root);
    for (;;) {
      std::shared_ptr<Node> node;
      const bool diving =
          !dive.empty() && (cfg_.selection == NodeSelection::kDepthFirstDive ||
                            incumbent_.empty());
      if (diving) {
        node = dive.back();
        dive.pop_back();
      } else {
        // Dive nodes left over go back to the open set.
        for (auto& n : dive) push_open(n);
        dive.clear();
        if (open_.empty()) break;
        auto it = open_.begin();
        node = it->second;
        open_.erase(it);
      }
      if (prune(node->bound)) continue;
      if (limits_hit()) {
        push_open(node);
        for (auto& n : dive) push_open(n);
        dive.clear();
        limit = true;
        break;
      }

      ++stats_.nodes;
      apply_node(*node);
      if (node->basis) lp_.set_basis(*node->basis);
      lp_.set_objective_cutoff(incumbent_.empty() ? kInf : cutoff_value());
      SolveStatus st = lp_.solve();
      if (st == SolveStatus::kNumericalFailure || st == SolveStatus::kLimitReached) {
        lp_.reset_basis();
        st = lp_.solve();
      }
      stats_.lp_iterations = lp_.iterations();
      if (st == SolveStatus::kInfeasible) {
        if (lp_.cutoff_hit()) pruned_min_ = std::min(pruned_min_, std::max(node->bound, cutoff_value()));
        record_bound();
        continue;
      }
      if (st == SolveStatus::kUnbounded) {
        unbounded = true;
        break;
      }
      if (st != SolveStatus::kOptimal) {
        numerical = true;
        record_bound();
        continue;
      }
      const double bound = std::max(node->bound, lp_.objective());
      if (prune(bound)) {
        record_bound();
        continue;
      }
      auto x = lp_.primal();
      const int var = select_branch(x);
      if (var < 0) {
        try_incumbent(x);
        record_bound();
        continue;
      }
      if (cfg_.verbose && cfg_.log && stats_.nodes % cfg_.log_every == 0) {
        *cfg_.log << "node " << stats_.nodes << " open " << open_.size()
                  << " bound " << global_bound() << " incumbent "
                  << (incumbent_.empty() ? kInf : incumbent_obj_) << "\n";
      }
      auto basis = std::make_shared<std::vector<lp::VarStatus>>(lp_.basis());
      const double v = x[static_cast<std::size_t>(var)];
      auto make_child = [&](double value) {
        auto child = std::make_shared<Node>();
        child->fix = node->fix;
        child->fix.emplace_back(var, value);
        child->bound = bound;
        child->depth = node->depth + 1;
        child->id = next_id_++;
        child->basis = basis;
        return child;
      };
      auto down = make_child(0.0);
      auto up = make_child(1.0);
      const bool up_first = v >= 0.5;
      if (diving || incumbent_.empty()) {
        // Explore the rounding direction next.
        dive.push_back(up_first ? down : up);
        dive.push_back(up_first ? up : down);
      } else {
        push_open(down);
        push_open(up);
      }
      record_bound();
    }

    stats_.wall_time = elapsed(t0_);
    if (unbounded) {
      result.status = SolveStatus::kUnbounded;
      return finish(result, true);
    }
    if (incumbent_.empty()) {
      result.status = limit ? SolveStatus::kLimitReached
                            : (numerical ? SolveStatus::kNumericalFailure
                                         : SolveStatus::kInfeasible);
      return finish(result, !limit);
    }
    result.values = incumbent_;
    result.objective = incumbent_obj_;
    result.status = limit ? SolveStatus::kLimitReached
                          : (numerical ? SolveStatus::kFeasibleWithGap : SolveStatus::kOptimal);
    return finish(result, !limit);
  }

 private:
  struct Node {
    std::vector<std::pair<int, double>> fix;
    double bound = -kInf;
    int depth = 0;
    std::int64_t id = 0;
    std::shared_ptr<std::vector<lp::VarStatus>> basis;
  };
  // Best bound first; ties prefer deeper nodes, then lower id.
  using Key = std::tuple<double, int, std::int64_t>;

  void push_open(const std::shared_ptr<Node>& n) {
    open_.emplace(Key{n->bound, -n->depth, n->id}, n);
  }

  double gap_tol() const {
    return std::max(cfg_.abs_gap, cfg_.rel_gap * std::fabs(incumbent_obj_));
  }
  double cutoff_value() const { return incumbent_obj_ - gap_tol(); }

  bool prunable(double bound) const {
    return !incumbent_.empty() && bound >= cutoff_value();
  }

  bool prune(double bound) {
    if (!prunable(bound)) return false;
    pruned_min_ = std::min(pruned_min_, bound);
    return true;
  }

  bool limits_hit() const {
    if (cfg_.node_limit > 0 && stats_.nodes >= cfg_.node_limit) return true;
    if (cfg_.time_limit > 0 && elapsed(t0_) >= cfg_.time_limit) return true;
    return false;
  }

  // Lower bound over the unexplored part of the tree, including subtrees
  // discarded within the gap tolerance.
  double global_bound() const {
    double b = std::min(incumbent_.empty() ? kInf : incumbent_obj_, pruned_min_);
    if (!open_.empty()) b = std::min(b, std::get<0>(open_.begin()->first));
    for (const auto& n : dive_) b = std::min(b, n->bound);
    return b;
  }

  void record_bound() {
    double b = global_bound();
    if (!stats_.bound_history.empty()) b = std::max(b, stats_.bound_history.back());
    stats_.bound_history.push_back(b);
  }

  void apply_node(const Node& node) {
    for (std::size_t j : fixed_) {
      lp_.set_col_bounds(j, model_.variable(j).lower, model_.variable(j).upper);
    }
    fixed_.clear();
    for (const auto& [var, value] : node.fix) {
      const auto j = static_cast<std::size_t>(var);
      lp_.set_col_bounds(j, value, value);
      fixed_.push_back(j);
    }
  }

  int select_branch(const std::vector<double>& x) const {
    int best = -1;
    int best_prio = std::numeric_limits<int>::min();
    double best_frac = -1.0;
    for (std::size_t j : binaries_) {
      const double f = std::fabs(x[j] - std::round(x[j]));
      if (f <= cfg_.int_tol) continue;
      const int prio = cfg_.branching == BranchingRule::kStructuralPriority
                           ? model_.variable(j).branch_priority
                           : 0;
      const double frac = std::min(x[j] - std::floor(x[j]), std::ceil(x[j]) - x[j]);
      if (prio > best_prio || (prio == best_prio && frac > best_frac + 1e-12)) {
        best = static_cast<int>(j);
        best_prio = prio;
        best_frac = frac;
      }
    }
    return best;
  }

  void accept_incumbent(const std::vector<double>& x) {
    const double obj = objective_value(model_, x);
    if (!incumbent_.empty() && obj >= incumbent_obj_) return;
    incumbent_ = x;
    incumbent_obj_ = obj;
    ++stats_.incumbent_updates;
  }

  // An integral LP point; rounded, then re-checked independently. If the
  // rounding breaks feasibility, the integers are fixed and the LP re-solved.
  void try_incumbent(std::vector<double> x) {
    for (std::size_t j : binaries_) x[j] = std::round(x[j]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = std::clamp(x[j], model_.variable(j).lower, model_.variable(j).upper);
    }
    if (check_feasibility(model_, x, cfg_.feas_tol, cfg_.int_tol).feasible) {
      accept_incumbent(x);
      return;
    }
    MilpModel fixed = model_;
    for (std::size_t j : binaries_) fixed.set_bounds(VarId{static_cast<std::int32_t>(j)}, x[j], x[j]);
    const Assignment polished = solve_lp(fixed, cfg_);
    if (polished.status == SolveStatus::kOptimal &&
        check_feasibility(model_, polished.values, cfg_.feas_tol, cfg_.int_tol).feasible) {
      accept_incumbent(polished.values);
    }
  }

  std::pair<Assignment, BnbStats> finish(Assignment result, bool /*closed*/) {
    stats_.wall_time = elapsed(t0_);
    stats_.incumbent = incumbent_.empty() ? kInf : incumbent_obj_;
    stats_.best_bound = global_bound();
    if (!stats_.bound_history.empty()) {
      stats_.best_bound = std::max(stats_.best_bound, stats_.bound_history.back());
    }
    stats_.best_bound = std::min(stats_.best_bound, stats_.incumbent);
    stats_.lp_iterations = lp_.iterations();
    return {std::move(result), stats_};
  }

  const MilpModel& model_;
  SolverConfig cfg_;
  lp::LpSolver lp_;
  std::vector<std::size_t> binaries_;
  std::vector<std::size_t> fixed_;
  std::multimap<Key, std::shared_ptr<Node>> open_;
  std::vector<std::shared_ptr<Node>> dive_;
  double pruned_min_ = kInf;
  std::vector<double> incumbent_;
  double incumbent_obj_ = kInf;
  std::int64_t next_id_ = 0;
  BnbStats stats_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

/// Branch-and-bound. A warm start is used only if it passes the independent
/// feasibility check; BnbStats::warm_start_rejected records the other case.
inline std::pair<Assignment, BnbStats> solve_milp(
    const MilpModel& model, const SolverConfig& config = {},
    const std::optional<Assignment>& warm_start = std::nullopt) {
  config.validate();
  detail::BranchAndBound bnb(model, config);
  return bnb.run(warm_start);
}

class BruteForceLimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Enumerates every assignment of the free binaries and solves the residual
/// LP for each; partial assignments are cut off by row activity bounds.
inline Assignment brute_force(const MilpModel& model, const SolverConfig& config = {},
                              std::size_t max_binaries = 25) {
  std::vector<std::size_t> free_bin;
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variable(j);
    if (v.integrality == Integrality::kBinary && v.lower < v.upper) free_bin.push_back(j);
  }
  if (free_bin.size() > max_binaries) {
    throw BruteForceLimitError("brute_force: " + std::to_string(free_bin.size()) +
                               " free binaries exceeds the cap of " +
                               std::to_string(max_binaries));
  }
  Assignment best;
  best.status = SolveStatus::kInfeasible;
  if (!detail::bounds_consistent(model)) return best;

  std::vector<double> lo(model.num_variables()), hi(model.num_variables());
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    lo[j] = model.variable(j).lower;
    hi[j] = model.variable(j).upper;
    if (model.variable(j).integrality == Integrality::kBinary) {
      lo[j] = std::ceil(lo[j] - 1e-9);
      hi[j] = std::floor(hi[j] + 1e-9);
    }
  }
  std::vector<std::vector<std::size_t>> rows_of(model.num_variables());
  for (std::size_t r = 0; r < model.num_constraints(); ++r) {
    for (const auto& t : model.constraint(r).terms) {
      rows_of[static_cast<std::size_t>(t.var.value)].push_back(r);
    }
  }
  auto row_possible = [&](std::size_t r) {
    const auto& row = model.constraint(r);
    double amin = 0.0, amax = 0.0;
    for (const auto& t : row.terms) {
      const auto j = static_cast<std::size_t>(t.var.value);
      const double a = t.coef * lo[j], b = t.coef * hi[j];
      amin += std::min(a, b);
      amax += std::max(a, b);
    }
    const double tol = 1e-9 * std::max(1.0, std::fabs(row.rhs));
    if (std::isnan(amin) || std::isnan(amax)) return true;
    switch (row.sense) {
      case Sense::kLessEqual: return amin <= row.rhs + tol;
      case Sense::kGreaterEqual: return amax >= row.rhs - tol;
      case Sense::kEqual: return amin <= row.rhs + tol && amax >= row.rhs - tol;
    }
    return true;
  };

  lp::LpSolver lp(model, detail::lp_options(config));
  for (std::size_t j : free_bin) lp.set_col_bounds(j, lo[j], hi[j]);

  auto leaf = [&]() {
    for (std::size_t j : free_bin) lp.set_col_bounds(j, lo[j], lo[j]);
    SolveStatus st = lp.solve();
    if (st == SolveStatus::kNumericalFailure) {
      lp.reset_basis();
      st = lp.solve();
    }
    if (st == SolveStatus::kUnbounded) {
      best.status = SolveStatus::kUnbounded;
      return;
    }
    if (st != SolveStatus::kOptimal) return;
    auto x = lp.primal();
    for (std::size_t j : free_bin) x[j] = lo[j];
    const double obj = objective_value(model, x);
    if (best.status != SolveStatus::kOptimal || obj < best.objective) {
      best.values = std::move(x);
      best.objective = obj;
      best.status = SolveStatus::kOptimal;
    }
  };

  auto recurse = [&](auto&& self, std::size_t k) -> void {
    if (best.status == SolveStatus::kUnbounded) return;
    if (k == free_bin.size()) {
      leaf();
      return;
    }
    const std::size_t j = free_bin[k];
    const double save_lo = lo[j], save_hi = hi[j];
    for (double v : {0.0, 1.0}) {
      if (v < save_lo || v > save_hi) continue;
      lo[j] = hi[j] = v;
      bool ok = true;
      for (std::size_t r : rows_of[j]) {
        if (!row_possible(r)) {
          ok = false;
          break;
        }
      }
      if (ok) self(self, k + 1);
    }
    lo[j] = save_lo;
    hi[j] = save_hi;
  };
  recurse(recurse, 0);
  if (best.status == SolveStatus::kUnbounded) best.values.clear();
  return best;
}

}  // namespace symtree
