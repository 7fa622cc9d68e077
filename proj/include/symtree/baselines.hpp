#pragma once

// Reference models and warm-start construction: a sparse L1 regression over
// the leaf basis, greedy CART trees, and a heuristic that turns either into a
// feasible assignment of the learning MILP.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symtree/dataset.hpp"
#include "symtree/expr.hpp"
#include "symtree/formulation.hpp"
#include "symtree/milp.hpp"
#include "symtree/solver.hpp"

namespace symtree {

namespace detail {

struct L1Fit {
  std::vector<double> coef;  // full leaf-basis length, zero off the support
  double loss = 0.0;         // sum of absolute residuals
};

/// Least-absolute-deviation fit of y on the `cols` columns of phi, over `rows`.
inline L1Fit l1_fit(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                    const std::vector<int>& rows, const std::vector<int>& cols,
                    double lo = -kInf, double hi = kInf) {
  L1Fit out;
  out.coef.assign(static_cast<std::size_t>(phi.cols()), 0.0);
  if (rows.empty()) return out;
  if (cols.empty()) {
    for (int i : rows) out.loss += std::fabs(y[i]);
    return out;
  }
  MilpModel m("l1fit");
  std::vector<VarId> c;
  for (int k : cols) c.push_back(m.add_variable("c" + std::to_string(k), lo, hi, Integrality::kContinuous));
  for (int i : rows) {
    const VarId ep = m.add_variable("ep" + std::to_string(i), 0.0, kInf, Integrality::kContinuous);
    const VarId em = m.add_variable("em" + std::to_string(i), 0.0, kInf, Integrality::kContinuous);
    m.set_objective(ep, 1.0);
    m.set_objective(em, 1.0);
    std::vector<Term> t;
    for (std::size_t q = 0; q < cols.size(); ++q) {
      const double v = phi(i, cols[q]);
      if (v != 0.0) t.push_back({c[q], v});
    }
    t.push_back({ep, 1.0});
    t.push_back({em, -1.0});
    m.add_constraint(std::move(t), Sense::kEqual, y[i]);
  }
  const Assignment sol = solve_lp(m);
  if (!sol.has_solution()) {
    out.loss = kInf;
    return out;
  }
  for (std::size_t q = 0; q < cols.size(); ++q) out.coef[static_cast<std::size_t>(cols[q])] = sol[c[q]];
  for (int i : rows) {
    double pred = 0.0;
    for (int k : cols) pred += out.coef[static_cast<std::size_t>(k)] * phi(i, k);
    out.loss += std::fabs(y[i] - pred);
  }
  return out;
}

/// All subsets of {0..n-1} with sizes in [1, max_size], smallest first, as long
/// as the running count stays within `cap`. The full set is always included
/// when max_size >= n.
inline std::vector<std::vector<int>> small_subsets(int n, int max_size, std::size_t cap = 256) {
  std::vector<std::vector<int>> out;
  max_size = std::min(max_size, n);
  for (int s = 1; s <= max_size; ++s) {
    std::vector<int> pick(static_cast<std::size_t>(s));
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<std::vector<int>> level;
    while (true) {
      level.push_back(pick);
      int j = s - 1;
      while (j >= 0 && pick[static_cast<std::size_t>(j)] == n - s + j) --j;
      if (j < 0) break;
      ++pick[static_cast<std::size_t>(j)];
      for (int q = j + 1; q < s; ++q) pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
    }
    if (out.size() + level.size() > cap) break;
    out.insert(out.end(), level.begin(), level.end());
  }
  if (max_size >= n && (out.empty() || out.back().size() != static_cast<std::size_t>(n))) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    out.push_back(all);
  }
  return out;
}

/// Best leaf fit over supports of at most `max_terms` columns (all columns if unset).
inline L1Fit best_leaf_fit(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                           const std::vector<int>& rows, std::optional<int> max_terms,
                           double lo, double hi) {
  const int nk = static_cast<int>(phi.cols());
  if (!max_terms || *max_terms >= nk) {
    std::vector<int> all(static_cast<std::size_t>(nk));
    std::iota(all.begin(), all.end(), 0);
    return l1_fit(phi, y, rows, all, lo, hi);
  }
  L1Fit best = l1_fit(phi, y, rows, {}, lo, hi);
  for (const auto& s : small_subsets(nk, *max_terms)) {
    L1Fit f = l1_fit(phi, y, rows, s, lo, hi);
    // Strict improvement keeps the smaller support on ties.
    if (f.loss < best.loss - 1e-9 * std::max(1.0, best.loss)) best = std::move(f);
  }
  return best;
}

/// Linear separator g(x) = sum a_k phi_k(x) with left iff g < b.
struct Separator {
  std::vector<int> support;
  std::vector<double> a;  // full branch-basis length
  double b = 0.0;
  double margin = 0.0;    // min over rows of the signed distance, in g units
  double hinge = 0.0;     // total hinge loss in standardized units (0 if separable)
  bool separable = false;
};

/// Max-margin (if separable) or hinge-loss separator of `side` (0 left, 1
/// right) over the `support` columns, fitted in standardized coordinates.
inline Separator fit_separator(const Eigen::MatrixXd& phi, const std::vector<int>& rows,
                               const std::vector<int>& side, const std::vector<int>& support) {
  Separator out;
  out.support = support;
  out.a.assign(static_cast<std::size_t>(phi.cols()), 0.0);
  std::vector<int> cols;
  std::vector<double> mu, sd;
  for (int k : support) {
    double m = 0.0;
    for (int i : rows) m += phi(i, k);
    m /= static_cast<double>(std::max<std::size_t>(rows.size(), 1));
    double v = 0.0;
    for (int i : rows) v += (phi(i, k) - m) * (phi(i, k) - m);
    v = std::sqrt(v / static_cast<double>(std::max<std::size_t>(rows.size(), 1)));
    if (v > 1e-12 * std::max(1.0, std::fabs(m))) {
      cols.push_back(k);
      mu.push_back(m);
      sd.push_back(v);
    }
  }
  auto std_val = [&](int i, std::size_t q) { return (phi(i, cols[q]) - mu[q]) / sd[q]; };
  auto to_original = [&](const std::vector<double>& as, double bs) {
    std::fill(out.a.begin(), out.a.end(), 0.0);
    double shift = 0.0;
    for (std::size_t q = 0; q < cols.size(); ++q) {
      out.a[static_cast<std::size_t>(cols[q])] = as[q] / sd[q];
      shift += as[q] * mu[q] / sd[q];
    }
    out.b = bs + shift;
  };

  // Max margin: maximize t with a in [-1, 1].
  {
    MilpModel m("margin");
    std::vector<VarId> a;
    for (std::size_t q = 0; q < cols.size(); ++q) a.push_back(m.add_variable("a" + std::to_string(q), -1.0, 1.0, Integrality::kContinuous));
    const VarId b = m.add_variable("b", -1e4, 1e4, Integrality::kContinuous);
    const VarId t = m.add_variable("t", -1e4, 1.0, Integrality::kContinuous);
    m.set_objective(t, -1.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int i = rows[r];
      std::vector<Term> terms;
      for (std::size_t q = 0; q < cols.size(); ++q) terms.push_back({a[q], std_val(i, q)});
      terms.push_back({b, -1.0});
      if (side[r] == 0) {
        terms.push_back({t, 1.0});
        m.add_constraint(std::move(terms), Sense::kLessEqual, 0.0);
      } else {
        terms.push_back({t, -1.0});
        m.add_constraint(std::move(terms), Sense::kGreaterEqual, 0.0);
      }
    }
    const Assignment sol = solve_lp(m);
    if (sol.has_solution() && sol[t] > 1e-7) {
      std::vector<double> as;
      for (auto v : a) as.push_back(sol[v]);
      to_original(as, sol[b]);
      out.margin = sol[t];
      out.separable = true;
      return out;
    }
  }

  // Soft margin: minimize total hinge loss at unit margin.
  MilpModel m("hinge");
  std::vector<VarId> a;
  for (std::size_t q = 0; q < cols.size(); ++q) a.push_back(m.add_variable("a" + std::to_string(q), -100.0, 100.0, Integrality::kContinuous));
  const VarId b = m.add_variable("b", -1e5, 1e5, Integrality::kContinuous);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    const VarId xi = m.add_variable("xi" + std::to_string(r), 0.0, kInf, Integrality::kContinuous);
    m.set_objective(xi, 1.0);
    std::vector<Term> terms;
    for (std::size_t q = 0; q < cols.size(); ++q) terms.push_back({a[q], std_val(i, q)});
    terms.push_back({b, -1.0});
    if (side[r] == 0) {
      terms.push_back({xi, -1.0});
      m.add_constraint(std::move(terms), Sense::kLessEqual, -1.0);
    } else {
      terms.push_back({xi, 1.0});
      m.add_constraint(std::move(terms), Sense::kGreaterEqual, 1.0);
    }
  }
  const Assignment sol = solve_lp(m);
  if (!sol.has_solution()) {
    out.hinge = kInf;
    return out;
  }
  std::vector<double> as;
  for (auto v : a) as.push_back(sol[v]);
  to_original(as, sol[b]);
  out.hinge = sol.objective;
  return out;
}

inline double separator_value(const Separator& s, const Eigen::MatrixXd& phi, int i) {
  double g = 0.0;
  for (int k : s.support) g += s.a[static_cast<std::size_t>(k)] * phi(i, k);
  return g;
}

/// Searches supports of at most `max_terms` branch-basis columns. Prefers the
/// smallest separable support (largest margin within a size), otherwise the
/// least hinge loss.
inline Separator best_separator(const Eigen::MatrixXd& phi, const std::vector<int>& rows,
                                const std::vector<int>& side, std::optional<int> max_terms) {
  const int nk = static_cast<int>(phi.cols());
  const int cap = max_terms ? std::min(*max_terms, nk) : nk;
  std::optional<Separator> best;
  for (const auto& s : small_subsets(nk, cap)) {
    if (best && best->separable && s.size() > best->support.size()) break;
    Separator cand = fit_separator(phi, rows, side, s);
    if (!best) {
      best = std::move(cand);
    } else if (cand.separable) {
      if (!best->separable || cand.margin > best->margin * (1 + 1e-9)) best = std::move(cand);
    } else if (!best->separable && cand.hinge < best->hinge - 1e-9 * std::max(1.0, best->hinge)) {
      best = std::move(cand);
    }
  }
  return *best;
}

/// Largest factor s > 0 such that s*a and s*b stay inside the box.
inline double max_scale(const std::vector<double>& a, double b, const HyperParams& hp) {
  double s = kInf;
  auto limit = [&](double v, double lo, double hi) {
    if (v > 0) s = std::min(s, hi / v);
    if (v < 0) s = std::min(s, lo / v);
  };
  for (double v : a) limit(v, hp.a_lb, hp.a_ub);
  limit(b, hp.b_lb, hp.b_ub);
  return s;
}

}  // namespace detail

// ------------------------------------------------------------------ sparse

/// Single global model y = sum c_k phi_k(x) fitted by least absolute deviation.
struct SparseModel {
  BasisSet basis;
  std::vector<double> coef;
  double mae = 0.0;

  Eigen::VectorXd predict(const Dataset& data) const {
    const Eigen::MatrixXd phi = featurize(basis, data);
    Eigen::VectorXd out(phi.rows());
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < coef.size(); ++k) v += coef[k] * phi(i, static_cast<Eigen::Index>(k));
      out[i] = v;
    }
    return out;
  }
  std::string to_text(int digits = 4) const {
    double mx = 0.0;
    for (double c : coef) mx = std::max(mx, std::fabs(c));
    return print_combination(coef, basis, 1e-9 * std::max(1.0, mx), digits);
  }
};

/// `max_terms` limits the support through exhaustive subset search.
inline SparseModel fit_sparse(const Dataset& data, const BasisSet& kf,
                              std::optional<int> max_terms = std::nullopt) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  const Eigen::MatrixXd phi = featurize(kf, data);
  std::vector<int> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  const auto fit = detail::best_leaf_fit(phi, data.y, rows, max_terms, -kInf, kInf);
  return SparseModel{kf, fit.coef, fit.loss / static_cast<double>(data.rows())};
}

// ------------------------------------------------------------------ greedy

enum class LeafModel { kConstant, kLinear };

/// Axis-aligned split "x_feature < threshold goes left"; heap numbering.
struct GreedyNode {
  bool active = false;
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;
  Eigen::VectorXd coef;  // intercept first, then one slope per raw feature
};

class GreedyTree {
 public:
  GreedyTree() = default;
  GreedyTree(int depth, LeafModel model, std::vector<std::string> names)
      : depth_(depth), model_(model), names_(std::move(names)),
        nodes_(static_cast<std::size_t>(1 << (depth + 1))) {}

  int depth() const { return depth_; }
  LeafModel model() const { return model_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const GreedyNode& node(int n) const { return nodes_.at(static_cast<std::size_t>(n)); }
  GreedyNode& node(int n) { return nodes_.at(static_cast<std::size_t>(n)); }
  int num_nodes() const { return static_cast<int>(nodes_.size()) - 1; }

  int leaf_of(std::span<const double> row) const {
    int n = 1;
    while (!node(n).leaf) n = row[static_cast<std::size_t>(node(n).feature)] < node(n).threshold ? 2 * n : 2 * n + 1;
    return n;
  }
  double predict(std::span<const double> row) const {
    const auto& nd = node(leaf_of(row));
    double v = nd.coef.size() ? nd.coef[0] : 0.0;
    for (Eigen::Index j = 1; j < nd.coef.size(); ++j) v += nd.coef[j] * row[static_cast<std::size_t>(j - 1)];
    return v;
  }
  Eigen::VectorXd predict(const Dataset& data) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(data.rows()));
    for (std::size_t i = 0; i < data.rows(); ++i) out[static_cast<Eigen::Index>(i)] = predict(data.row(i));
    return out;
  }
  std::vector<int> leaves_of(const Dataset& data) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < data.rows(); ++i) out.push_back(leaf_of(data.row(i)));
    return out;
  }

 private:
  int depth_ = 0;
  LeafModel model_ = LeafModel::kConstant;
  std::vector<std::string> names_;
  std::vector<GreedyNode> nodes_;
};

namespace detail {

/// Leaf fit and its sum of squared errors over `rows`.
inline std::pair<Eigen::VectorXd, double> greedy_leaf(const Dataset& data, const std::vector<int>& rows,
                                                      LeafModel model) {
  const Eigen::Index p = static_cast<Eigen::Index>(data.features());
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(model == LeafModel::kLinear ? p + 1 : 1);
  if (rows.empty()) return {coef, 0.0};
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(r);
  for (Eigen::Index q = 0; q < r; ++q) y[q] = data.y[rows[static_cast<std::size_t>(q)]];
  if (model == LeafModel::kConstant) {
    coef[0] = y.mean();
    return {coef, (y.array() - coef[0]).square().sum()};
  }
  Eigen::MatrixXd a(r, p + 1);
  for (Eigen::Index q = 0; q < r; ++q) {
    a(q, 0) = 1.0;
    a.row(q).tail(p) = data.x.row(rows[static_cast<std::size_t>(q)]);
  }
  coef = a.completeOrthogonalDecomposition().solve(y);
  return {coef, (a * coef - y).squaredNorm()};
}

inline void grow_greedy(GreedyTree& tree, const Dataset& data, int n, const std::vector<int>& rows,
                        int depth_left, std::size_t min_leaf) {
  auto& nd = tree.node(n);
  nd.active = true;
  auto [coef, sse] = greedy_leaf(data, rows, tree.model());
  nd.coef = coef;
  nd.leaf = true;
  if (depth_left == 0 || rows.size() < 2 * min_leaf) return;

  double best = sse - 1e-12 * std::max(1.0, sse);
  int best_f = -1;
  double best_t = 0.0;
  for (std::size_t f = 0; f < data.features(); ++f) {
    std::vector<int> order = rows;
    std::stable_sort(order.begin(), order.end(), [&](int p, int q) {
      return data.x(p, static_cast<Eigen::Index>(f)) < data.x(q, static_cast<Eigen::Index>(f));
    });
    auto val = [&](std::size_t q) { return data.x(order[q], static_cast<Eigen::Index>(f)); };
    // Prefix sums for the constant model.
    std::vector<double> s1(order.size() + 1, 0.0), s2(order.size() + 1, 0.0);
    for (std::size_t q = 0; q < order.size(); ++q) {
      const double y = data.y[order[q]];
      s1[q + 1] = s1[q] + y;
      s2[q + 1] = s2[q] + y * y;
    }
    for (std::size_t cut = min_leaf; cut + min_leaf <= order.size(); ++cut) {
      if (!(val(cut - 1) < val(cut))) continue;
      double total;
      if (tree.model() == LeafModel::kConstant) {
        const double nl = static_cast<double>(cut), nr = static_cast<double>(order.size() - cut);
        const double sl = s1[cut], sr = s1.back() - s1[cut];
        total = (s2[cut] - sl * sl / nl) + (s2.back() - s2[cut] - sr * sr / nr);
      } else {
        const std::vector<int> left(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
        const std::vector<int> right(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
        total = greedy_leaf(data, left, tree.model()).second + greedy_leaf(data, right, tree.model()).second;
      }
      if (total < best) {
        best = total;
        best_f = static_cast<int>(f);
        best_t = 0.5 * (val(cut - 1) + val(cut));
      }
    }
  }
  if (best_f < 0) return;
  nd.leaf = false;
  nd.feature = best_f;
  nd.threshold = best_t;
  std::vector<int> left, right;
  for (int i : rows) (data.x(i, best_f) < best_t ? left : right).push_back(i);
  grow_greedy(tree, data, 2 * n, left, depth_left - 1, min_leaf);
  grow_greedy(tree, data, 2 * n + 1, right, depth_left - 1, min_leaf);
}

}  // namespace detail

/// CART on the raw inputs: squared-error splits, at most `depth` levels and at
/// least `min_leaf` rows per child. Linear leaves use least squares with an
/// intercept (minimum-norm when rank deficient).
inline GreedyTree fit_greedy_tree(const Dataset& data, int depth, LeafModel model,
                                  std::size_t min_leaf = 2) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  if (depth < 0) throw std::invalid_argument("greedy tree depth must be >= 0");
  if (min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
  GreedyTree tree(depth, model, data.feature_names);
  std::vector<int> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  detail::grow_greedy(tree, data, 1, rows, depth, min_leaf);
  return tree;
}

// -------------------------------------------------------------- warm start

/// Discrete skeleton of a tree: which nodes branch, where each row goes, and
/// which basis functions each split and leaf may use. Vectors are indexed by
/// node id (entry 0 unused).
struct TreeSkeleton {
  std::vector<bool> branch;
  std::vector<int> routing;                 // row -> leaf node
  std::vector<std::vector<int>> split_support;
  std::vector<std::vector<int>> leaf_support;  // used only when N_F is set
};

/// Fixes every binary of `br` to the skeleton and solves the remaining LP.
/// Returns nothing when the skeleton admits no feasible continuous part.
inline std::optional<Assignment> complete_assignment(const BuildResult& br, const TreeSkeleton& s,
                                                     const SolverConfig& cfg = {}) {
  const auto& v = br.map;
  const int nn = br.nodes.count();
  const int nd = static_cast<int>(br.y.size());
  MilpModel m = br.model;
  auto fix = [&](VarId id, bool on) {
    if (!m.valid(id)) return;
    const double val = on ? 1.0 : 0.0;
    const auto& var = m.variable(id);
    if (val < var.lower || val > var.upper) throw std::out_of_range("fixed");
    m.set_bounds(id, val, val);
  };
  try {
    for (int n = 1; n <= nn; ++n) {
      fix(v.d[n], s.branch[static_cast<std::size_t>(n)]);
      const bool internal = br.nodes.is_internal(n);
      if (internal) {
        std::vector<bool> on(br.branch.size(), false);
        if (s.branch[static_cast<std::size_t>(n)]) {
          for (int k : s.split_support[static_cast<std::size_t>(n)]) on[static_cast<std::size_t>(k)] = true;
        }
        for (std::size_t k = 0; k < br.branch.size(); ++k) {
          if (!v.omega[n].empty()) fix(v.omega[n][k], on[k]);
        }
      }
      if (!v.w.empty() && !v.w[n].empty()) {
        std::vector<bool> on(br.leaf.size(), false);
        if (!s.branch[static_cast<std::size_t>(n)]) {
          for (int k : s.leaf_support[static_cast<std::size_t>(n)]) on[static_cast<std::size_t>(k)] = true;
        }
        for (std::size_t k = 0; k < br.leaf.size(); ++k) fix(v.w[n][k], on[k]);
      }
    }
    for (int i = 0; i < nd; ++i) {
      for (int n = 1; n <= nn; ++n) fix(v.z[i][n], s.routing[static_cast<std::size_t>(i)] == n);
    }
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    const auto& var = m.variable(j);
    if (var.integrality == Integrality::kBinary && var.lower != var.upper) {
      throw std::logic_error("complete_assignment: binary " + var.name + " left free");
    }
  }
  Assignment sol = solve_lp(m, cfg);
  if (!sol.has_solution()) return std::nullopt;
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    if (m.variable(j).integrality == Integrality::kBinary) sol.values[j] = std::round(sol.values[j]);
  }
  if (!check_feasibility(br.model, sol.values, cfg.feas_tol, cfg.int_tol).feasible) return std::nullopt;
  sol.objective = objective_value(br.model, sol.values);
  sol.status = SolveStatus::kFeasibleWithGap;
  return sol;
}

namespace detail {

inline std::vector<int> rows_at(const std::vector<int>& routing, int node) {
  std::vector<int> out;
  for (std::size_t i = 0; i < routing.size(); ++i) {
    if (routing[i] == node) out.push_back(static_cast<int>(i));
  }
  return out;
}

inline void fill_leaf_supports(const BuildResult& br, TreeSkeleton& s) {
  const int nn = br.nodes.count();
  s.leaf_support.assign(static_cast<std::size_t>(nn + 1), {});
  if (!br.hp.n_f) return;
  for (int n = 1; n <= nn; ++n) {
    if (s.branch[static_cast<std::size_t>(n)]) continue;
    const auto rows = rows_at(s.routing, n);
    if (rows.empty()) continue;
    const auto fit = best_leaf_fit(br.phi_f, br.y, rows, br.hp.n_f, br.hp.c_lb, br.hp.c_ub);
    for (std::size_t k = 0; k < fit.coef.size(); ++k) {
      if (fit.coef[k] != 0.0) s.leaf_support[static_cast<std::size_t>(n)].push_back(static_cast<int>(k));
    }
  }
}

}  // namespace detail

/// Converts a greedy tree into an MILP assignment. Every split must test a raw
/// variable that also appears as a bare member of the branching basis, and the
/// greedy tree may not be deeper than the MILP.
inline std::optional<Assignment> warm_start_assignment(const GreedyTree& g, const Dataset& data,
                                                       const BuildResult& br,
                                                       const SolverConfig& cfg = {}) {
  if (g.depth() > br.nodes.depth()) return std::nullopt;
  const int nn = br.nodes.count();
  TreeSkeleton s;
  s.branch.assign(static_cast<std::size_t>(nn + 1), false);
  s.split_support.assign(static_cast<std::size_t>(nn + 1), {});
  for (int n = 1; n <= g.num_nodes(); ++n) {
    const auto& gn = g.node(n);
    if (!gn.active || gn.leaf) continue;
    const auto k = br.branch.find_variable(g.feature_names()[static_cast<std::size_t>(gn.feature)]);
    if (k < 0) return std::nullopt;
    s.branch[static_cast<std::size_t>(n)] = true;
    s.split_support[static_cast<std::size_t>(n)] = {static_cast<int>(k)};
  }
  if (!s.branch[1]) return std::nullopt;
  s.routing = g.leaves_of(data);
  detail::fill_leaf_supports(br, s);
  return complete_assignment(br, s, cfg);
}

/// Every row in one child of the root, no split features, coefficients chosen by LP.
inline std::optional<Assignment> trivial_assignment(const BuildResult& br, const SolverConfig& cfg = {}) {
  const int nn = br.nodes.count();
  for (int leaf : {2, 3}) {
    TreeSkeleton s;
    s.branch.assign(static_cast<std::size_t>(nn + 1), false);
    s.branch[1] = true;
    s.split_support.assign(static_cast<std::size_t>(nn + 1), {});
    s.routing.assign(static_cast<std::size_t>(br.y.size()), leaf);
    detail::fill_leaf_supports(br, s);
    if (auto a = complete_assignment(br, s, cfg)) return a;
  }
  return std::nullopt;
}

struct WarmStart {
  Assignment assignment;
  std::string source;
};

namespace detail {

/// Alternates leaf fitting, residual relabelling and separator fitting for a
/// depth-one skeleton, starting from `labels` (0 left, 1 right). Returns the
/// best completed assignment seen.
inline std::optional<Assignment> refine_depth_one(const BuildResult& br, std::vector<int> labels,
                                                  const SolverConfig& cfg, int max_iter = 12) {
  const int nd = static_cast<int>(br.y.size());
  const int nn = br.nodes.count();
  std::vector<int> all(static_cast<std::size_t>(nd));
  std::iota(all.begin(), all.end(), 0);
  std::optional<Assignment> best;
  std::vector<std::vector<int>> seen;
  for (int it = 0; it < max_iter; ++it) {
    const Separator sep = best_separator(br.phi_b, all, labels, br.hp.n_b);
    std::vector<int> routed(static_cast<std::size_t>(nd));
    for (int i = 0; i < nd; ++i) routed[static_cast<std::size_t>(i)] = separator_value(sep, br.phi_b, i) < sep.b ? 0 : 1;
    if (std::find(seen.begin(), seen.end(), routed) != seen.end()) break;
    seen.push_back(routed);

    TreeSkeleton s;
    s.branch.assign(static_cast<std::size_t>(nn + 1), false);
    s.branch[1] = true;
    s.split_support.assign(static_cast<std::size_t>(nn + 1), {});
    s.split_support[1] = sep.support;
    s.routing.resize(static_cast<std::size_t>(nd));
    for (int i = 0; i < nd; ++i) s.routing[static_cast<std::size_t>(i)] = 2 + routed[static_cast<std::size_t>(i)];
    fill_leaf_supports(br, s);
    if (auto a = complete_assignment(br, s, cfg)) {
      if (!best || a->objective < best->objective) best = std::move(a);
      if (best->objective <= cfg.abs_gap) break;
    }

    // Relabel each row by the leaf that explains it better.
    L1Fit fits[2];
    for (int side = 0; side < 2; ++side) {
      std::vector<int> rows;
      for (int i = 0; i < nd; ++i) {
        if (routed[static_cast<std::size_t>(i)] == side) rows.push_back(i);
      }
      fits[side] = best_leaf_fit(br.phi_f, br.y, rows, br.hp.n_f, br.hp.c_lb, br.hp.c_ub);
    }
    std::vector<int> next = routed;
    for (int i = 0; i < nd; ++i) {
      double r[2];
      for (int side = 0; side < 2; ++side) {
        double p = 0.0;
        for (std::size_t k = 0; k < fits[side].coef.size(); ++k) p += fits[side].coef[k] * br.phi_f(i, static_cast<Eigen::Index>(k));
        r[side] = std::fabs(br.y[i] - p);
      }
      const double tol = 1e-9 * std::max(1.0, std::fabs(br.y[i]));
      if (r[0] < r[1] - tol) next[static_cast<std::size_t>(i)] = 0;
      if (r[1] < r[0] - tol) next[static_cast<std::size_t>(i)] = 1;
    }
    if (next == routed) break;
    labels = std::move(next);
  }
  return best;
}

}  // namespace detail

/// Best of several constructive starts: converted greedy trees, and for
/// depth one, alternating refinement seeded by greedy routings and by the
/// residual sign of a global fit and by sign and median cuts of each
/// branching function. Always returns a feasible assignment when the trivial
/// single-leaf tree is feasible.
inline std::optional<WarmStart> find_warm_start(const Dataset& data, const BuildResult& br,
                                                const SolverConfig& cfg = {}) {
  std::optional<WarmStart> best;
  auto offer = [&](std::optional<Assignment> a, const char* source) {
    if (!a) return;
    if (!best || a->objective < best->assignment.objective - 1e-12) best = WarmStart{std::move(*a), source};
  };
  const int depth = br.nodes.depth();
  const int nd = static_cast<int>(data.rows());
  const GreedyTree constant = fit_greedy_tree(data, depth, LeafModel::kConstant);
  const GreedyTree linear = fit_greedy_tree(data, depth, LeafModel::kLinear);
  offer(warm_start_assignment(constant, data, br, cfg), "greedy-constant");
  offer(warm_start_assignment(linear, data, br, cfg), "greedy-linear");
  if (depth == 1) {
    auto done = [&] { return best && best->assignment.objective <= cfg.abs_gap; };
    auto labels_of = [&](const GreedyTree& g) {
      std::vector<int> out;
      for (int leaf : g.leaves_of(data)) out.push_back(leaf == 2 ? 0 : 1);
      return out;
    };
    if (!done()) offer(detail::refine_depth_one(br, labels_of(linear), cfg), "refined-linear");
    if (!done()) offer(detail::refine_depth_one(br, labels_of(constant), cfg), "refined-constant");
    if (!done()) {
      std::vector<int> all(static_cast<std::size_t>(nd));
      std::iota(all.begin(), all.end(), 0);
      const auto global = detail::best_leaf_fit(br.phi_f, br.y, all, br.hp.n_f, br.hp.c_lb, br.hp.c_ub);
      std::vector<int> labels(static_cast<std::size_t>(nd));
      for (int i = 0; i < nd; ++i) {
        double p = 0.0;
        for (std::size_t k = 0; k < global.coef.size(); ++k) p += global.coef[k] * br.phi_f(i, static_cast<Eigen::Index>(k));
        labels[static_cast<std::size_t>(i)] = br.y[i] - p > 0 ? 1 : 0;
      }
      offer(detail::refine_depth_one(br, labels, cfg), "refined-residual");
    }
    // Sign and median cuts of each single branching function.
    for (Eigen::Index k = 0; k < br.phi_b.cols() && !done(); ++k) {
      std::vector<double> col(br.phi_b.col(k).data(), br.phi_b.col(k).data() + nd);
      std::nth_element(col.begin(), col.begin() + nd / 2, col.end());
      for (double cut : {0.0, col[static_cast<std::size_t>(nd / 2)]}) {
        if (done()) break;
        std::vector<int> labels(static_cast<std::size_t>(nd));
        int right = 0;
        for (int i = 0; i < nd; ++i) right += labels[static_cast<std::size_t>(i)] = br.phi_b(i, k) >= cut ? 1 : 0;
        if (right == 0 || right == nd) continue;
        offer(detail::refine_depth_one(br, labels, cfg), "refined-cut");
      }
    }
    // With one function per split, every split is a cut of one column:
    // score them all by the two leaf fits and refine the best.
    if (br.hp.n_b && *br.hp.n_b == 1 && !done()) {
      std::set<std::vector<int>> tried;
      std::vector<int> best_labels;
      double best_loss = kInf;
      for (Eigen::Index k = 0; k < br.phi_b.cols(); ++k) {
        std::vector<double> cuts(br.phi_b.col(k).data(), br.phi_b.col(k).data() + nd);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t c = 1; c < cuts.size(); ++c) {
          std::vector<int> labels(static_cast<std::size_t>(nd));
          std::vector<int> side[2];
          for (int i = 0; i < nd; ++i) {
            const int s = br.phi_b(i, k) >= cuts[c] ? 1 : 0;
            labels[static_cast<std::size_t>(i)] = s;
            side[s].push_back(i);
          }
          if (!tried.insert(labels).second) continue;
          double loss = 0.0;
          for (const auto& rows : side) {
            loss += detail::best_leaf_fit(br.phi_f, br.y, rows, br.hp.n_f, br.hp.c_lb, br.hp.c_ub).loss;
          }
          if (loss < best_loss - 1e-12) {
            best_loss = loss;
            best_labels = std::move(labels);
          }
        }
      }
      if (!best_labels.empty()) offer(detail::refine_depth_one(br, best_labels, cfg), "refined-scan");
    }
  }
  if (!best) offer(trivial_assignment(br, cfg), "single-leaf");
  return best;
}

}  // namespace symtree
