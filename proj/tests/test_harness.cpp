#include <sstream>

#include <gtest/gtest.h>

#include "symtree/harness.hpp"

using namespace symtree;
using namespace symtree::harness;

namespace {

std::string csv(const Table& t) {
  std::ostringstream out;
  t.write(out);
  return out.str();
}

}  // namespace

TEST(Config, ParsesEverySection) {
  std::istringstream in(R"(
[data]
source = viscosity
n = 25
seed = 4
sigma = 0.1

[basis]
branch = log10(M), M
leaf = 1, log10(M)

[hyperparams]
depth = 2
n_b = 1
n_f = none
lambda_c = 0.5
big_m_mode = global
big_m = 50

[solver]
node_limit = 300
selection = depth-first
warm_start = false

[experiment]
sizes = 20, 40
sigmas = 0, 0.2
seeds = 1,2,3
)");
  const Config c = parse_config(in);
  EXPECT_EQ(c.data.source, "viscosity");
  EXPECT_EQ(c.data.n, 25u);
  EXPECT_EQ(c.data.seed, 4u);
  EXPECT_DOUBLE_EQ(c.data.sigma, 0.1);
  EXPECT_EQ(c.branch, (std::vector<std::string>{"log10(M)", "M"}));
  EXPECT_EQ(c.leaf, (std::vector<std::string>{"1", "log10(M)"}));
  EXPECT_EQ(c.fit.hp.depth, 2);
  EXPECT_EQ(c.fit.hp.n_b, 1);
  EXPECT_FALSE(c.fit.hp.n_f.has_value());
  EXPECT_DOUBLE_EQ(c.fit.hp.lambda_c, 0.5);
  EXPECT_EQ(c.fit.hp.big_m_mode, BigMMode::kGlobal);
  EXPECT_EQ(c.fit.solver.node_limit, 300);
  EXPECT_EQ(c.fit.solver.selection, NodeSelection::kDepthFirstDive);
  EXPECT_FALSE(c.fit.warm_start);
  EXPECT_EQ(c.experiment.sizes, (std::vector<std::size_t>{20, 40}));
  EXPECT_EQ(c.experiment.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.experiment.sigmas, (std::vector<double>{0.0, 0.2}));
}

TEST(Config, OverridesKeepUnmentionedDefaults) {
  std::istringstream in("[solver]\nnode_limit = 7\n");
  const Config c = parse_config(in, default_config("two-tank"));
  EXPECT_EQ(c.fit.solver.node_limit, 7);
  EXPECT_EQ(c.fit.hp.n_f, 2);
  EXPECT_EQ(c.branch, tank_branch_basis());
}

TEST(Config, RejectsBadInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };
  EXPECT_THROW(parse("[dat]\nn = 3\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nsize = 3\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nn = three\n"), ConfigError);
  EXPECT_THROW(parse("[hyperparams]\nbig_m_mode = huge\n"), ConfigError);
  EXPECT_THROW(parse("[solver]\nwarm_start = maybe\n"), ConfigError);
  EXPECT_THROW(parse("[data\n"), ConfigError);
  EXPECT_THROW(default_config("fig9"), ConfigError);
  Config c = parse("[basis]\nbranch = x\n");
  EXPECT_THROW(validate(c), ConfigError);
  c.leaf = {"1"};
  c.fit.hp.epsilon = -1;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, BasisMustParseOverTheData) {
  Config c = default_config("viscosity");
  c.branch = {"log10(Q)"};
  const Dataset d = gen_viscosity(5, 1);
  EXPECT_THROW(make_bases(c, d), ConfigError);
}

TEST(Metrics, Basics) {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, 0, 1);
  EXPECT_EQ(mae(x, x), 0.0);
  EXPECT_THROW(mae(x, Eigen::VectorXd::Zero(4)), std::invalid_argument);
  EXPECT_DOUBLE_EQ(rmse({0, 0}, {3, 4}), std::sqrt(12.5));
  EXPECT_THROW(coeff_l2({{1.0}}, {{1.0, 2.0}}), std::invalid_argument);
}

TEST(Metrics, TrueModelRollsOutOntoItself) {
  const Trajectory truth = simulate_two_tank({0.1, 1.2}, default_test_schedule(), 20.0, 0.05);
  auto exact = [](double h1, double h2, double f1, double f2, double) { return two_tank_rhs(h1, h2, f1, f2).first; };
  const Trajectory again = simulate_two_tank({0.1, 1.2}, default_test_schedule(), 20.0, 0.05, exact);
  EXPECT_LE(rollout_rmse(again, truth), 1e-9);
}

TEST(Metrics, MatchingUndoesALeafPermutation) {
  // Regime 0 rows sit in leaf 3 and regime 1 rows in leaf 2.
  const std::vector<int> routing{3, 3, 2, 2, 3};
  const std::vector<int> regimes{0, 0, 1, 1, 0};
  const auto m = match_leaves(routing, regimes, 2);
  EXPECT_EQ(m, (std::vector<int>{3, 2}));
  const std::vector<std::vector<double>> by_leaf{{}, {}, {5.0, 1.0}, {2.0, 3.0}};
  const std::vector<std::vector<double>> learned{by_leaf[static_cast<std::size_t>(m[0])],
                                                 by_leaf[static_cast<std::size_t>(m[1])]};
  EXPECT_EQ(coeff_l2(learned, {{2.0, 3.0}, {5.0, 1.0}}), 0.0);
}

TEST(Metrics, MatchingTiesGoToTheLowerNode) {
  // Both leaves vote for regime 0 with equal counts.
  const auto m = match_leaves({2, 2, 3, 3}, {0, 0, 0, 0}, 2);
  EXPECT_EQ(m, (std::vector<int>{2, 0}));
}

TEST(Metrics, NormalizedSplit) {
  const auto s = normalized_split({-2.0, 1.0}, 4.0, true);
  EXPECT_EQ(s, (std::vector<double>{1.0, -0.5, -2.0}));
}

TEST(Truth, CoefficientsFollowTheBasisOrder) {
  const BasisSet kf({"F1", "sqrt(abs(h1-h2))", "1"}, {"h1", "h2", "F1", "F2"}, BasisRole::kLeaf);
  const RegimeTruth t = truth_for("two-tank");
  EXPECT_EQ(coefficient_vector(t.leaves[0], kf), (std::vector<double>{1.0, -0.5, 0.0}));
  const BasisSet thin({"1", "F1"}, {"h1", "h2", "F1", "F2"}, BasisRole::kLeaf);
  EXPECT_THROW(coefficient_vector(t.leaves[0], thin), ConfigError);
}

TEST(Table, QuotesCellsThatNeedIt) {
  Table t;
  t.columns = {"a", "b"};
  t.add({"1", "x, y"});
  t.add({"say \"hi\"", "2"});
  EXPECT_EQ(csv(t), "a,b\n1,\"x, y\"\n\"say \"\"hi\"\"\",2\n");
  EXPECT_THROW(t.add({"only one"}), std::logic_error);
}

TEST(Experiments, ViscosityIsReproducibleAndWithinWindows) {
  Config c = default_config("viscosity");
  c.experiment.sizes = {40};
  const ViscosityResult a = run_viscosity(c);
  const ViscosityResult b = run_viscosity(c);
  EXPECT_EQ(csv(a.table), csv(b.table));
  ASSERT_EQ(a.runs.size(), 1u);
  const auto& r = a.runs[0];
  EXPECT_TRUE(r.fit.invariant_failures.empty()) << join(r.fit.invariant_failures, "; ");
  EXPECT_NEAR(r.low_slope, 1.0, 0.05);
  EXPECT_NEAR(r.high_slope, 3.4, 0.05);
  EXPECT_NEAR(r.low_intercept, -0.49, 0.1);
  EXPECT_NEAR(r.high_intercept, -11.28, 0.1);
  EXPECT_GE(r.threshold, 4.1);
  EXPECT_LE(r.threshold, 4.55);
}

TEST(Experiments, ErrorMapShape) {
  Config c = default_config("error-map");
  c.data.n = 40;
  const ErrorMapResult r = run_error_map(c);
  EXPECT_EQ(r.grid.rows.size(), 100u);
  EXPECT_EQ(r.grid.columns.size(), 9u);
  EXPECT_TRUE(r.zero_where_regimes_agree);
  EXPECT_TRUE(r.max_error_in_mismatch);
  // Grid points are x1-major, so (0, 0) is never on the 10-point grid; the
  // nearest points are inside the disk and must be exact.
  for (const auto& row : r.grid.rows) {
    if (std::stod(row[2]) < 0.5) EXPECT_LE(std::stod(row[5]), 1e-6);
  }
}

TEST(Experiments, WritesCsvFiles) {
  Config c = default_config("viscosity");
  c.experiment.sizes = {20};
  const auto dir = std::filesystem::temp_directory_path() / "symtree_harness_test";
  std::filesystem::remove_all(dir);
  run_experiment(c, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "viscosity.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Invariants, HoldOnAFittedTree) {
  Config c = default_config("two-tank");
  const Dataset d = make_dataset(c.data, c.experiment);
  const auto [kb, kf] = make_bases(c, d);
  const FitRecord r = fit_and_check(d, kb, kf, c.fit);
  EXPECT_TRUE(r.invariant_failures.empty()) << join(r.invariant_failures, "; ");
}
