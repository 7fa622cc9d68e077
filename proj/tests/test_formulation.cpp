#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/random_instances.hpp"
#include "symtree/casestudies.hpp"
#include "symtree/formulation.hpp"
#include "symtree/learn.hpp"
#include "symtree/solver.hpp"

using namespace symtree;
using symtree::testing::tiny_tree_dataset;

namespace {

BasisSet case1_branch(const Dataset& d) {
  return BasisSet({"x1", "x2", "x1^2", "x2^2", "x1*x2"}, d.feature_names, BasisRole::kBranching);
}
BasisSet case1_leaf(const Dataset& d) {
  return BasisSet({"1", "x1", "x2", "x1^2", "x2^2", "x1*x2"}, d.feature_names, BasisRole::kLeaf);
}

int count_close(const std::vector<double>& v, double target) {
  int c = 0;
  for (double x : v) c += std::fabs(x - target) < 1e-9 ? 1 : 0;
  return c;
}

}  // namespace

TEST(NodeIndex, AncestorsPartitionIntoLeftAndRight) {
  const NodeIndex idx(3);
  EXPECT_EQ(idx.count(), 15);
  EXPECT_EQ(idx.first_terminal(), 8);
  for (int n = 1; n <= idx.count(); ++n) {
    const auto a = idx.ancestors(n);
    EXPECT_EQ(static_cast<int>(a.size()), static_cast<int>(std::floor(std::log2(n))));
    auto l = idx.left_ancestors(n);
    auto r = idx.right_ancestors(n);
    EXPECT_EQ(l.size() + r.size(), a.size());
    for (int m : l) EXPECT_EQ(std::count(r.begin(), r.end(), m), 0);
    EXPECT_EQ(idx.is_terminal(n), n >= 8);
  }
}

TEST(Formulation, Case1CountsAtPaperScale) {
  const Dataset d = gen_case1(100, 1);
  const BuildResult br = build(d, case1_branch(d), case1_leaf(d), HyperParams{});
  EXPECT_NEAR(static_cast<double>(br.model.num_variables()), 1268, 5);
  EXPECT_NEAR(static_cast<double>(br.model.num_binaries()), 307, 5);
  EXPECT_NEAR(static_cast<double>(br.model.num_constraints()), 2572, 5);
}

TEST(Formulation, TwoTankCounts) {
  const Dataset d = simulate_two_tank({0.2, 1.5}, default_training_schedule(), 8.0, 0.1).tank1_dataset(80);
  const BasisSet kb({"h1 - h2", "h1", "h2", "F1"}, d.feature_names, BasisRole::kBranching);
  const BasisSet kf({"1", "sqrt(abs(h1 - h2))", "sqrt(h2)", "F1"}, d.feature_names, BasisRole::kLeaf);
  HyperParams hp;
  hp.n_b = 1;
  hp.n_f = 2;
  const BuildResult br = build(d, kb, kf, hp);
  EXPECT_NEAR(static_cast<double>(br.model.num_variables()), 1019, 5);
  EXPECT_NEAR(static_cast<double>(br.model.num_binaries()), 258, 5);
  EXPECT_NEAR(static_cast<double>(br.model.num_constraints()), 2066, 5);
}

TEST(Formulation, SinglePointMustReachAChildOfTheRoot) {
  Dataset d;
  d.feature_names = {"x"};
  d.x = Eigen::MatrixXd::Constant(1, 1, 0.5);
  d.y = Eigen::VectorXd::Constant(1, 2.0);
  const BasisSet kb({"x"}, d.feature_names, BasisRole::kBranching);
  const BasisSet kf({"1"}, d.feature_names, BasisRole::kLeaf);
  const BuildResult br = build(d, kb, kf, HyperParams{});
  const auto& z = br.map.z[0];
  const auto [x, stats] = solve_milp(br.model);
  ASSERT_TRUE(x.has_solution());
  EXPECT_NEAR(x[z[1]], 0.0, 1e-9);
  EXPECT_NEAR(x[z[2]] + x[z[3]], 1.0, 1e-9);
  EXPECT_NEAR(x.objective, 0.0, 1e-9);
}

TEST(Formulation, EmptyDatasetIsRejected) {
  Dataset d;
  d.feature_names = {"x"};
  const BasisSet kb({"x"}, d.feature_names, BasisRole::kBranching);
  const BasisSet kf({"1"}, d.feature_names, BasisRole::kLeaf);
  EXPECT_THROW(build(d, kb, kf, HyperParams{}), std::invalid_argument);
}

TEST(Formulation, HyperParamsValidate) {
  HyperParams hp;
  hp.epsilon = 0.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = {};
  hp.a_lb = 2.0;
  hp.a_ub = 1.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = {};
  hp.depth = 0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
}

// Oracle equivalence on tiny tree-learning instances.
TEST(Formulation, TinyInstancesMatchBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 4 + trial % 3;
    const Dataset d = tiny_tree_dataset(rng, n);
    const BasisSet kb({"x", "x^2"}, d.feature_names, BasisRole::kBranching);
    const BasisSet kf({"1", "x"}, d.feature_names, BasisRole::kLeaf);
    HyperParams hp;
    hp.n_b = 1;
    const BuildResult br = build(d, kb, kf, hp);
    const Assignment oracle = brute_force(br.model);
    ASSERT_TRUE(oracle.has_solution());
    const auto [cold, stats] = solve_milp(br.model);
    ASSERT_EQ(cold.status, SolveStatus::kOptimal);
    EXPECT_NEAR(cold.objective, oracle.objective, 1e-6) << "trial " << trial;
    FitOptions opt;
    opt.hp = hp;
    const FitResult warm = fit_tree(d, kb, kf, opt);
    ASSERT_EQ(warm.status(), SolveStatus::kOptimal);
    EXPECT_NEAR(warm.assignment.objective, oracle.objective, 1e-6) << "trial " << trial;
  }
}

TEST(Formulation, DecodedRoutingMatchesInference) {
  std::mt19937_64 rng(5);
  const Dataset d = tiny_tree_dataset(rng, 6);
  const BasisSet kb({"x", "x^2"}, d.feature_names, BasisRole::kBranching);
  const BasisSet kf({"1", "x"}, d.feature_names, BasisRole::kLeaf);
  const BuildResult br = build(d, kb, kf, HyperParams{});
  const auto [x, stats] = solve_milp(br.model);
  ASSERT_TRUE(x.has_solution());
  const TreeSolution sol = decode(x, br);
  const auto leaves = sol.tree.predict_leaves(d);
  for (int i = 0; i < 6; ++i) {
    const double g = sol.tree.split_value(1, d.row(static_cast<std::size_t>(i)));
    if (std::fabs(g - sol.tree.node(1).b) > br.hp.epsilon) EXPECT_EQ(leaves[i], sol.routing[i]);
  }
  EXPECT_DOUBLE_EQ(sol.terms.l_c, 1.0);
}

TEST(Formulation, LinearizationIsExactAndObjectiveIsMae) {
  const Dataset d = gen_case1(20, 2);
  const BuildResult br = build(d, case1_branch(d), case1_leaf(d), [] {
    HyperParams hp;
    hp.n_b = 2;
    return hp;
  }());
  FitOptions opt;
  opt.hp = br.hp;
  const FitResult r = fit_tree(d, br.branch, br.leaf, opt);
  ASSERT_TRUE(r.has_tree());
  const auto& v = r.problem.map;
  for (int i = 0; i < 20; ++i) {
    for (int n = 1; n <= 3; ++n) {
      if (!r.problem.model.valid(v.delta[i][n])) continue;
      const double z = r.assignment[v.z[i][n]];
      const double expect = z > 0.5 ? r.assignment[v.yhat[i][n]] : 0.0;
      EXPECT_NEAR(r.assignment[v.delta[i][n]], expect, 1e-6);
    }
  }
  const double mae = (r.tree().predict(d) - d.y).cwiseAbs().mean();
  EXPECT_NEAR(r.assignment.objective, mae, 1e-6);
  EXPECT_LE(r.solution->terms.l_acc, 1e-6);
}

TEST(Formulation, LeafCardinalityAtFullBasisMatchesUnconstrained) {
  const Dataset d = gen_case1(8, 4);
  HyperParams hp;
  hp.n_b = 1;
  FitOptions a;
  a.hp = hp;
  FitOptions b = a;
  b.hp.n_f = 6;
  const FitResult ra = fit_tree(d, case1_branch(d), case1_leaf(d), a);
  const FitResult rb = fit_tree(d, case1_branch(d), case1_leaf(d), b);
  ASSERT_EQ(ra.status(), SolveStatus::kOptimal);
  ASSERT_EQ(rb.status(), SolveStatus::kOptimal);
  EXPECT_NEAR(ra.assignment.objective, rb.assignment.objective, 1e-6);
  EXPECT_GT(rb.problem.model.num_binaries(), ra.problem.model.num_binaries());
}

TEST(Formulation, UnroutedLeafIsZeroedOnDecode) {
  // Constant data: the warm start sends every row to node 2.
  Dataset d;
  d.feature_names = {"x"};
  d.x.resize(5, 1);
  d.x << 0.0, 1.0, 2.0, 3.0, 4.0;
  d.y = Eigen::VectorXd::Constant(5, 3.0);
  const BasisSet kb({"x"}, d.feature_names, BasisRole::kBranching);
  const BasisSet kf({"1"}, d.feature_names, BasisRole::kLeaf);
  const BuildResult br = build(d, kb, kf, HyperParams{});
  const auto start = trivial_assignment(br);
  ASSERT_TRUE(start.has_value());
  const TreeSolution sol = decode(*start, br);
  EXPECT_EQ(count_close(sol.tree.node(3).c, 0.0), 1);
  EXPECT_NEAR(sol.tree.node(2).c[0], 3.0, 1e-9);
  EXPECT_NEAR(sol.terms.l_acc, 0.0, 1e-9);
}

TEST(Formulation, ScalingASplitKeepsRouting) {
  const Dataset d = gen_case1(30, 3);
  HyperParams hp;
  hp.n_b = 2;
  FitOptions opt;
  opt.hp = hp;
  const FitResult r = fit_tree(d, case1_branch(d), case1_leaf(d), opt);
  ASSERT_TRUE(r.has_tree());
  const Dataset grid = case1_grid(25);
  const auto base = r.tree().predict_leaves(grid);
  for (double t : {1e-3, 0.5, 7.0, 1e3}) {
    std::vector<TreeNode> nodes;
    for (int n = 1; n <= r.tree().num_nodes(); ++n) {
      TreeNode nd = r.tree().node(n);
      if (n == 1) {
        for (double& a : nd.a) a *= t;
        nd.b *= t;
      }
      nodes.push_back(nd);
    }
    const SymbolicTree scaled(1, r.tree().branch_basis(), r.tree().leaf_basis(), nodes);
    EXPECT_EQ(scaled.predict_leaves(grid), base) << "t = " << t;
  }
}
