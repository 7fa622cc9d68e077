#pragma once

// Encodes tree learning as a MILP and decodes solutions back into trees.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symtree/dataset.hpp"
#include "symtree/expr.hpp"
#include "symtree/milp.hpp"
#include "symtree/tree.hpp"

namespace symtree {

enum class BigMMode { kGlobal, kPerRow };

struct HyperParams {
  int depth = 1;
  std::optional<int> n_b;  // max basis functions per split
  std::optional<int> n_f;  // max basis functions per leaf; unset drops w
  double lambda_c = 0.0;
  double lambda_m = 0.0;
  double a_lb = -100.0, a_ub = 100.0;
  double b_lb = -100.0, b_ub = 100.0;
  double c_lb = -1000.0, c_ub = 1000.0;
  double y_lb = -1000.0, y_ub = 1000.0;
  BigMMode big_m_mode = BigMMode::kPerRow;
  double big_m = 100.0;
  double epsilon = 1e-4;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("hyperparameters: " + m); };
    if (depth < 1) fail("depth must be >= 1");
    if (depth > 10) fail("depth above 10 is not supported");
    if (n_b && *n_b < 1) fail("N_B must be >= 1");
    if (n_f && *n_f < 1) fail("N_F must be >= 1");
    if (lambda_c < 0 || lambda_m < 0) fail("lambda weights must be >= 0");
    if (!(a_lb <= a_ub) || !(b_lb <= b_ub) || !(c_lb <= c_ub) || !(y_lb <= y_ub)) {
      fail("lower bound above upper bound");
    }
    if (!(epsilon > 0)) fail("epsilon must be > 0");
    if (big_m_mode == BigMMode::kGlobal && !(big_m > 0)) fail("big-M must be > 0");
  }
};

/// Complete binary tree of depth D, nodes 1..2^(D+1)-1.
class NodeIndex {
 public:
  explicit NodeIndex(int depth) : depth_(depth) {}

  int depth() const { return depth_; }
  int count() const { return (1 << (depth_ + 1)) - 1; }
  int first_terminal() const { return 1 << depth_; }
  bool is_terminal(int n) const { return n >= first_terminal(); }
  bool is_internal(int n) const { return !is_terminal(n); }

  std::vector<int> ancestors(int n) const {
    std::vector<int> out;
    for (int m = n / 2; m >= 1; m /= 2) out.push_back(m);
    return out;
  }
  /// Ancestors whose left branch leads to n.
  std::vector<int> left_ancestors(int n) const {
    std::vector<int> out;
    for (int c = n; c > 1; c /= 2) {
      if (c % 2 == 0) out.push_back(c / 2);
    }
    return out;
  }
  std::vector<int> right_ancestors(int n) const {
    std::vector<int> out;
    for (int c = n; c > 1; c /= 2) {
      if (c % 2 == 1) out.push_back(c / 2);
    }
    return out;
  }

 private:
  int depth_;
};

/// Handles for every decision variable; absent entries hold VarId{-1}.
/// Node-indexed vectors are indexed by node id (entry 0 unused).
struct VariableIndexMap {
  std::vector<VarId> d;                       // [n]
  std::vector<std::vector<VarId>> z;          // [i][n]
  std::vector<std::vector<VarId>> a, omega;   // [n][k], internal n
  std::vector<VarId> b;                       // [n], internal n
  std::vector<std::vector<VarId>> c, w;       // [n][k]; w only with N_F
  std::vector<std::vector<VarId>> yhat, delta;  // [i][n]
  std::vector<VarId> y_pred, eps_plus, eps_minus;  // [i]
  std::vector<std::vector<VarId>> c_plus, c_minus;  // [n][k]
};

struct BuildResult {
  MilpModel model;
  VariableIndexMap map;
  NodeIndex nodes{1};
  Eigen::MatrixXd phi_b;
  Eigen::MatrixXd phi_f;
  Eigen::VectorXd y;
  BasisSet branch;
  BasisSet leaf;
  HyperParams hp;
};

inline constexpr int kPriorityD = 3;
inline constexpr int kPriorityFeature = 2;
inline constexpr int kPriorityZ = 1;

/// Builds the learning MILP. The root's d is fixed to 1 and terminal d's to
/// 0 through bounds.
inline BuildResult build(const Dataset& data, const BasisSet& kb, const BasisSet& kf,
                         const HyperParams& hp) {
  hp.validate();
  if (data.empty()) throw std::invalid_argument("empty dataset");
  if (kb.empty() || kf.empty()) throw std::invalid_argument("basis sets must be nonempty");

  BuildResult r;
  r.hp = hp;
  r.nodes = NodeIndex(hp.depth);
  r.branch = kb;
  r.leaf = kf;
  r.phi_b = featurize(kb, data);
  r.phi_f = featurize(kf, data);
  r.y = data.y;
  for (Eigen::Index i = 0; i < r.y.size(); ++i) {
    if (!std::isfinite(r.y[i])) {
      throw std::invalid_argument("row " + std::to_string(i) + ": non-finite target");
    }
  }

  const int nd = static_cast<int>(data.rows());
  const int nn = r.nodes.count();
  const int nkb = static_cast<int>(kb.size());
  const int nkf = static_cast<int>(kf.size());
  const NodeIndex& idx = r.nodes;
  MilpModel& m = r.model;
  VariableIndexMap& v = r.map;
  const VarId none{-1};
  auto s = [](auto... parts) {
    std::string out;
    ((out += std::to_string(parts), out += '_'), ...);
    out.pop_back();
    return out;
  };

  // Variables.
  v.d.assign(static_cast<std::size_t>(nn + 1), none);
  for (int n = 1; n <= nn; ++n) {
    const double fixed = n == 1 ? 1.0 : 0.0;
    const bool pinned = n == 1 || idx.is_terminal(n);
    v.d[n] = m.add_variable("d_" + s(n), pinned ? fixed : 0.0, pinned ? fixed : 1.0,
                            Integrality::kBinary, kPriorityD);
  }
  v.z.assign(static_cast<std::size_t>(nd), std::vector<VarId>(static_cast<std::size_t>(nn + 1), none));
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      v.z[i][n] = m.add_variable("z_" + s(i + 1, n), 0, 1, Integrality::kBinary, kPriorityZ);
    }
  }
  v.a.assign(static_cast<std::size_t>(nn + 1), {});
  v.omega.assign(static_cast<std::size_t>(nn + 1), {});
  v.b.assign(static_cast<std::size_t>(nn + 1), none);
  for (int n = 1; n <= nn; ++n) {
    if (!idx.is_internal(n)) continue;
    for (int k = 0; k < nkb; ++k) {
      v.a[n].push_back(m.add_variable("a_" + s(n, k + 1), hp.a_lb, hp.a_ub, Integrality::kContinuous));
    }
    for (int k = 0; k < nkb; ++k) {
      v.omega[n].push_back(
          m.add_variable("omega_" + s(n, k + 1), 0, 1, Integrality::kBinary, kPriorityFeature));
    }
    v.b[n] = m.add_variable("b_" + s(n), hp.b_lb, hp.b_ub, Integrality::kContinuous);
  }
  v.c.assign(static_cast<std::size_t>(nn + 1), {});
  v.w.assign(static_cast<std::size_t>(nn + 1), {});
  for (int n = 1; n <= nn; ++n) {
    for (int k = 0; k < nkf; ++k) {
      v.c[n].push_back(m.add_variable("c_" + s(k + 1, n), hp.c_lb, hp.c_ub, Integrality::kContinuous));
    }
    if (hp.n_f) {
      for (int k = 0; k < nkf; ++k) {
        v.w[n].push_back(
            m.add_variable("w_" + s(n, k + 1), 0, 1, Integrality::kBinary, kPriorityFeature));
      }
    }
  }
  v.yhat.assign(static_cast<std::size_t>(nd), std::vector<VarId>(static_cast<std::size_t>(nn + 1), none));
  v.delta = v.yhat;
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      v.yhat[i][n] = m.add_variable("yhat_" + s(i + 1, n), hp.y_lb, hp.y_ub, Integrality::kContinuous);
    }
  }
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      v.delta[i][n] = m.add_variable("delta_" + s(i + 1, n), hp.y_lb, hp.y_ub, Integrality::kContinuous);
    }
  }
  for (int i = 0; i < nd; ++i) {
    v.y_pred.push_back(m.add_variable("ypred_" + s(i + 1), hp.y_lb, hp.y_ub, Integrality::kContinuous));
  }
  for (int i = 0; i < nd; ++i) {
    v.eps_plus.push_back(m.add_variable("epsp_" + s(i + 1), 0, kInf, Integrality::kContinuous));
    v.eps_minus.push_back(m.add_variable("epsm_" + s(i + 1), 0, kInf, Integrality::kContinuous));
  }
  const double cmax = std::max(std::fabs(hp.c_lb), std::fabs(hp.c_ub));
  v.c_plus.assign(static_cast<std::size_t>(nn + 1), {});
  v.c_minus.assign(static_cast<std::size_t>(nn + 1), {});
  for (int n = 1; n <= nn; ++n) {
    for (int k = 0; k < nkf; ++k) {
      v.c_plus[n].push_back(m.add_variable("cp_" + s(k + 1, n), 0, cmax, Integrality::kContinuous));
      v.c_minus[n].push_back(m.add_variable("cm_" + s(k + 1, n), 0, cmax, Integrality::kContinuous));
    }
  }

  // Tree structure.
  for (int n = 2; n <= nn; ++n) {
    m.add_constraint({{v.d[n], 1.0}, {v.d[n / 2], -1.0}}, Sense::kLessEqual, 0.0, "tree1_" + s(n));
  }
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      m.add_constraint({{v.z[i][n], 1.0}, {v.d[n], 1.0}}, Sense::kLessEqual, 1.0, "tree2_" + s(i + 1, n));
    }
  }
  for (int i = 0; i < nd; ++i) {
    std::vector<Term> t;
    for (int n = 1; n <= nn; ++n) t.push_back({v.z[i][n], 1.0});
    m.add_constraint(std::move(t), Sense::kEqual, 1.0, "tree3_" + s(i + 1));
  }
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      for (int a : idx.ancestors(n)) {
        m.add_constraint({{v.z[i][n], 1.0}, {v.d[a], -1.0}}, Sense::kLessEqual, 0.0,
                         "tree4_" + s(i + 1, n, a));
      }
    }
  }

  // Split coefficients.
  for (int n = 1; n <= nn; ++n) {
    if (!idx.is_internal(n)) continue;
    for (int k = 0; k < nkb; ++k) {
      m.add_constraint({{v.a[n][k], 1.0}, {v.omega[n][k], -hp.a_ub}}, Sense::kLessEqual, 0.0,
                       "aub_" + s(n, k + 1));
      m.add_constraint({{v.a[n][k], 1.0}, {v.omega[n][k], -hp.a_lb}}, Sense::kGreaterEqual, 0.0,
                       "alb_" + s(n, k + 1));
    }
    for (int k = 0; k < nkb; ++k) {
      m.add_constraint({{v.omega[n][k], 1.0}, {v.d[n], -1.0}}, Sense::kLessEqual, 0.0,
                       "omegad_" + s(n, k + 1));
    }
    if (hp.n_b) {
      std::vector<Term> t;
      for (int k = 0; k < nkb; ++k) t.push_back({v.omega[n][k], 1.0});
      m.add_constraint(std::move(t), Sense::kLessEqual, *hp.n_b, "nb_" + s(n));
    }
  }

  // Routing.
  const double amax = std::max(std::fabs(hp.a_lb), std::fabs(hp.a_ub));
  const double bmax = std::max(std::fabs(hp.b_lb), std::fabs(hp.b_ub));
  auto routing_m = [&](int i) {
    if (hp.big_m_mode == BigMMode::kGlobal) return hp.big_m;
    double sum = bmax + hp.epsilon;
    for (int k = 0; k < nkb; ++k) sum += amax * std::fabs(r.phi_b(i, k));
    return sum;
  };
  for (int i = 0; i < nd; ++i) {
    const double big = routing_m(i);
    for (int n = 1; n <= nn; ++n) {
      for (int a : idx.left_ancestors(n)) {
        std::vector<Term> t;
        for (int k = 0; k < nkb; ++k) {
          if (r.phi_b(i, k) != 0.0) t.push_back({v.a[a][k], r.phi_b(i, k)});
        }
        t.push_back({v.b[a], -1.0});
        t.push_back({v.z[i][n], big});
        m.add_constraint(std::move(t), Sense::kLessEqual, big - hp.epsilon, "left_" + s(i + 1, n, a));
      }
      for (int a : idx.right_ancestors(n)) {
        std::vector<Term> t;
        for (int k = 0; k < nkb; ++k) {
          if (r.phi_b(i, k) != 0.0) t.push_back({v.a[a][k], r.phi_b(i, k)});
        }
        t.push_back({v.b[a], -1.0});
        t.push_back({v.z[i][n], -big});
        m.add_constraint(std::move(t), Sense::kGreaterEqual, -big, "right_" + s(i + 1, n, a));
      }
    }
  }

  // Node predictions.
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      std::vector<Term> t{{v.yhat[i][n], 1.0}};
      for (int k = 0; k < nkf; ++k) {
        if (r.phi_f(i, k) != 0.0) t.push_back({v.c[n][k], -r.phi_f(i, k)});
      }
      m.add_constraint(std::move(t), Sense::kEqual, 0.0, "yhat_" + s(i + 1, n));
    }
  }

  // Leaf constants vanish on branching nodes.
  for (int n = 1; n <= nn; ++n) {
    if (hp.n_f) {
      for (int k = 0; k < nkf; ++k) {
        m.add_constraint({{v.c[n][k], 1.0}, {v.w[n][k], -hp.c_ub}}, Sense::kLessEqual, 0.0,
                         "cub_" + s(k + 1, n));
        m.add_constraint({{v.c[n][k], 1.0}, {v.w[n][k], -hp.c_lb}}, Sense::kGreaterEqual, 0.0,
                         "clb_" + s(k + 1, n));
      }
      for (int k = 0; k < nkf; ++k) {
        m.add_constraint({{v.w[n][k], 1.0}, {v.d[n], 1.0}}, Sense::kLessEqual, 1.0,
                         "wd_" + s(n, k + 1));
      }
      std::vector<Term> t;
      for (int k = 0; k < nkf; ++k) t.push_back({v.w[n][k], 1.0});
      m.add_constraint(std::move(t), Sense::kLessEqual, *hp.n_f, "nf_" + s(n));
    } else {
      for (int k = 0; k < nkf; ++k) {
        m.add_constraint({{v.c[n][k], 1.0}, {v.d[n], hp.c_ub}}, Sense::kLessEqual, hp.c_ub,
                         "cub_" + s(k + 1, n));
        m.add_constraint({{v.c[n][k], 1.0}, {v.d[n], hp.c_lb}}, Sense::kGreaterEqual, hp.c_lb,
                         "clb_" + s(k + 1, n));
      }
    }
  }

  // delta = yhat * z.
  const double ymax = std::max(std::fabs(hp.y_lb), std::fabs(hp.y_ub));
  for (int i = 0; i < nd; ++i) {
    double big = hp.big_m;
    if (hp.big_m_mode == BigMMode::kPerRow) {
      double reach = 0.0;
      for (int k = 0; k < nkf; ++k) reach += cmax * std::fabs(r.phi_f(i, k));
      big = std::min(ymax, reach);
    }
    for (int n = 1; n <= nn; ++n) {
      const VarId dl = v.delta[i][n], yh = v.yhat[i][n], z = v.z[i][n];
      const std::string tag = s(i + 1, n);
      m.add_constraint({{dl, 1.0}, {z, -hp.y_ub}}, Sense::kLessEqual, 0.0, "dub_" + tag);
      m.add_constraint({{dl, 1.0}, {z, -hp.y_lb}}, Sense::kGreaterEqual, 0.0, "dlb_" + tag);
      m.add_constraint({{dl, 1.0}, {yh, -1.0}, {z, big}}, Sense::kLessEqual, big, "dyu_" + tag);
      m.add_constraint({{dl, 1.0}, {yh, -1.0}, {z, -big}}, Sense::kGreaterEqual, -big, "dyl_" + tag);
    }
  }
  for (int i = 0; i < nd; ++i) {
    std::vector<Term> t{{v.y_pred[i], 1.0}};
    for (int n = 1; n <= nn; ++n) t.push_back({v.delta[i][n], -1.0});
    m.add_constraint(std::move(t), Sense::kEqual, 0.0, "ypred_" + s(i + 1));
  }

  // Absolute values.
  for (int i = 0; i < nd; ++i) {
    m.add_constraint({{v.eps_plus[i], 1.0}, {v.eps_minus[i], -1.0}, {v.y_pred[i], 1.0}},
                     Sense::kEqual, r.y[i], "err_" + s(i + 1));
  }
  for (int n = 1; n <= nn; ++n) {
    for (int k = 0; k < nkf; ++k) {
      m.add_constraint({{v.c_plus[n][k], 1.0}, {v.c_minus[n][k], -1.0}, {v.c[n][k], -1.0}},
                       Sense::kEqual, 0.0, "cabs_" + s(k + 1, n));
    }
  }

  // Objective.
  for (int i = 0; i < nd; ++i) {
    m.set_objective(v.eps_plus[i], 1.0 / nd);
    m.set_objective(v.eps_minus[i], 1.0 / nd);
  }
  if (hp.lambda_c != 0.0) {
    for (int n = 1; n <= nn; ++n) m.set_objective(v.d[n], hp.lambda_c);
  }
  if (hp.lambda_m != 0.0) {
    for (int n = 1; n <= nn; ++n) {
      for (int k = 0; k < nkf; ++k) {
        m.set_objective(v.c_plus[n][k], hp.lambda_m);
        m.set_objective(v.c_minus[n][k], hp.lambda_m);
      }
    }
  }
  return r;
}

class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectiveTerms {
  double l_acc = 0.0;
  double l_c = 0.0;
  double l_m = 0.0;
  double total(const HyperParams& hp) const { return l_acc + hp.lambda_c * l_c + hp.lambda_m * l_m; }
};

struct TreeSolution {
  SymbolicTree tree;
  std::vector<int> routing;  // training row -> node
  ObjectiveTerms terms;
  double objective = 0.0;
};

/// Reads a solver assignment back into a tree. Binaries are rounded at 0.5.
inline TreeSolution decode(const Assignment& x, const BuildResult& br) {
  if (!x.has_solution()) throw std::invalid_argument("decode: assignment has no solution");
  const auto& v = br.map;
  const NodeIndex& idx = br.nodes;
  const int nn = idx.count();
  const int nd = static_cast<int>(br.y.size());
  const std::size_t nkb = br.branch.size(), nkf = br.leaf.size();
  auto on = [&](VarId id) { return x[id] > 0.5; };

  std::vector<TreeNode> nodes(static_cast<std::size_t>(nn));
  std::vector<bool> branch(static_cast<std::size_t>(nn + 1), false);
  for (int n = 1; n <= nn; ++n) branch[n] = on(v.d[n]);
  for (int n = 1; n <= nn; ++n) {
    auto& t = nodes[static_cast<std::size_t>(n - 1)];
    t.a.assign(nkb, 0.0);
    t.c.assign(nkf, 0.0);
    if (branch[n]) {
      t.kind = NodeKind::kBranch;
      for (std::size_t k = 0; k < nkb; ++k) t.a[k] = x[v.a[n][k]];
      t.b = x[v.b[n]];
    } else {
      t.kind = (n == 1 || branch[n / 2]) ? NodeKind::kLeaf : NodeKind::kInactive;
      for (std::size_t k = 0; k < nkf; ++k) t.c[k] = x[v.c[n][k]];
    }
  }
  if (!branch[1]) throw InconsistencyError("root does not branch");
  for (int n = 2; n <= nn; ++n) {
    if (branch[n] && !branch[n / 2]) {
      throw InconsistencyError("node " + std::to_string(n) + " branches below a non-branch node");
    }
  }

  std::vector<int> routing(static_cast<std::size_t>(nd), 0);
  std::vector<int> count(static_cast<std::size_t>(nn + 1), 0);
  for (int i = 0; i < nd; ++i) {
    for (int n = 1; n <= nn; ++n) {
      if (on(v.z[i][n])) {
        if (routing[i] != 0) {
          throw InconsistencyError("row " + std::to_string(i) + " routed to two nodes");
        }
        routing[i] = n;
      }
    }
    if (routing[i] == 0) throw InconsistencyError("row " + std::to_string(i) + " not routed");
    if (nodes[static_cast<std::size_t>(routing[i] - 1)].kind != NodeKind::kLeaf) {
      throw InconsistencyError("row " + std::to_string(i) + " routed to non-leaf node " +
                               std::to_string(routing[i]));
    }
    ++count[routing[i]];
  }

  // Objective recomputed from the decoded quantities.
  ObjectiveTerms terms;
  for (int i = 0; i < nd; ++i) {
    const auto& c = nodes[static_cast<std::size_t>(routing[i] - 1)].c;
    double pred = 0.0;
    for (std::size_t k = 0; k < nkf; ++k) pred += c[k] * br.phi_f(i, static_cast<Eigen::Index>(k));
    terms.l_acc += std::fabs(br.y[i] - pred);
  }
  terms.l_acc /= nd;
  for (int n = 1; n <= nn; ++n) {
    terms.l_c += branch[n] ? 1.0 : 0.0;
    for (std::size_t k = 0; k < nkf; ++k) terms.l_m += std::fabs(x[v.c[n][k]]);
  }
  const double recomputed = terms.total(br.hp);
  if (std::fabs(recomputed - x.objective) > 1e-6 * std::max(1.0, std::fabs(x.objective))) {
    throw InconsistencyError("recomputed objective " + format_g17(recomputed) +
                             " disagrees with solver objective " + format_g17(x.objective));
  }

  for (int n = 1; n <= nn; ++n) {
    auto& t = nodes[static_cast<std::size_t>(n - 1)];
    if (t.kind != NodeKind::kLeaf || count[n] == 0) std::fill(t.c.begin(), t.c.end(), 0.0);
  }
  TreeSolution sol{SymbolicTree(idx.depth(), br.branch, br.leaf, std::move(nodes)),
                   std::move(routing), terms, x.objective};
  return sol;
}

/// L_acc by tree inference on `data`, L_c = branch count, L_m = sum |c|.
inline ObjectiveTerms objective_terms(const SymbolicTree& tree, const Dataset& data) {
  ObjectiveTerms t;
  const Eigen::VectorXd pred = tree.predict(data);
  t.l_acc = data.rows() ? (data.y - pred).cwiseAbs().sum() / static_cast<double>(data.rows()) : 0.0;
  for (int n = 1; n <= tree.num_nodes(); ++n) {
    const auto& nd = tree.node(n);
    if (nd.kind == NodeKind::kBranch) t.l_c += 1.0;
    for (double c : nd.c) t.l_m += std::fabs(c);
  }
  return t;
}

}  // namespace symtree
