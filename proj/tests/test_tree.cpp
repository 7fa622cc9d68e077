#include <random>

#include <gtest/gtest.h>

#include "symtree/casestudies.hpp"
#include "symtree/tree.hpp"

using namespace symtree;

namespace {

const std::vector<std::string> kVars{"x1", "x2"};

// 1.01 x1^2 + x2^2 >= 2.54 goes right to x1^2 + x2, else x1^2 + x2^2.
SymbolicTree case1_tree() {
  const BasisSet kb({"x1", "x2", "x1^2", "x2^2", "x1*x2"}, kVars, BasisRole::kBranching);
  const BasisSet kf({"1", "x1", "x2", "x1^2", "x2^2", "x1*x2"}, kVars, BasisRole::kLeaf);
  std::vector<TreeNode> nodes(3);
  nodes[0] = {NodeKind::kBranch, {0, 0, 1.01, 1, 0}, 2.54, std::vector<double>(6, 0.0)};
  nodes[1] = {NodeKind::kLeaf, std::vector<double>(5, 0.0), 0.0, {0, 0, 0, 1, 1, 0}};
  nodes[2] = {NodeKind::kLeaf, std::vector<double>(5, 0.0), 0.0, {0, 0, 1, 1, 0, 0}};
  return SymbolicTree(1, kb, kf, nodes);
}

SymbolicTree random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const BasisSet kb({"x1", "x2", "x1^2", "x1*x2"}, kVars, BasisRole::kBranching);
  const BasisSet kf({"1", "x1", "x2^2"}, kVars, BasisRole::kLeaf);
  const int count = (1 << (depth + 1)) - 1;
  std::vector<TreeNode> nodes(static_cast<std::size_t>(count));
  for (int n = 1; n <= count; ++n) {
    auto& t = nodes[static_cast<std::size_t>(n - 1)];
    t.a.assign(4, 0.0);
    t.c.assign(3, 0.0);
    if (n < (1 << depth)) {
      t.kind = NodeKind::kBranch;
      for (double& a : t.a) a = u(rng);
      t.b = u(rng);
    } else {
      t.kind = NodeKind::kLeaf;
      for (double& c : t.c) c = u(rng);
    }
  }
  return SymbolicTree(depth, kb, kf, nodes);
}

}  // namespace

TEST(SymbolicTree, Case1Examples) {
  const SymbolicTree t = case1_tree();
  const std::vector<double> origin{0.0, 0.0}, corner{2.0, 2.0};
  EXPECT_EQ(t.predict_leaf(origin), 2);
  EXPECT_DOUBLE_EQ(t.predict(origin), 0.0);
  EXPECT_EQ(t.predict_leaf(corner), 3);
  EXPECT_DOUBLE_EQ(t.predict(corner), 6.0);
  EXPECT_EQ(to_text(t), "x1^2 + x2 if x1^2 + 0.9901*x2^2 >= 2.515, otherwise x1^2 + x2^2");
}

TEST(SymbolicTree, BoundaryRoutesRight) {
  const SymbolicTree t = case1_tree();
  // x1 = 0, x2^2 = 2.54 puts g exactly on b.
  const std::vector<double> row{0.0, std::sqrt(2.54)};
  const double g = t.split_value(1, row);
  if (g == t.node(1).b) EXPECT_EQ(t.predict_leaf(row), 3);
  const std::vector<double> zero{0.0, 0.0};
  std::vector<TreeNode> nodes{t.node(1), t.node(2), t.node(3)};
  nodes[0].b = 0.0;
  const SymbolicTree at_zero(1, t.branch_basis(), t.leaf_basis(), nodes);
  EXPECT_EQ(at_zero.predict_leaf(zero), 3);
}

TEST(SymbolicTree, IdenticalLeavesIgnoreTheSplit) {
  const SymbolicTree base = case1_tree();
  std::vector<TreeNode> nodes{base.node(1), base.node(2), base.node(2)};
  const SymbolicTree t(1, base.branch_basis(), base.leaf_basis(), nodes);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> r{u(rng), u(rng)};
    EXPECT_DOUBLE_EQ(t.predict(r), r[0] * r[0] + r[1] * r[1]);
  }
}

TEST(SymbolicTree, ViscosityText) {
  const BasisSet kb({"log10(M)", "M"}, {"M"}, BasisRole::kBranching);
  const BasisSet kf({"1", "log10(M)", "M"}, {"M"}, BasisRole::kLeaf);
  std::vector<TreeNode> nodes(3);
  nodes[0] = {NodeKind::kBranch, {1.0, 0.0}, 4.24, {0, 0, 0}};
  nodes[1] = {NodeKind::kLeaf, {0, 0}, 0.0, {-0.49, 1.0, 0.0}};
  nodes[2] = {NodeKind::kLeaf, {0, 0}, 0.0, {-11.28, 3.4, 0.0}};
  const SymbolicTree t(1, kb, kf, nodes);
  EXPECT_NE(to_text(t).find("3.4*log10(M) - 11.28 if log10(M) >= 4.24"), std::string::npos) << to_text(t);
}

TEST(SymbolicTree, RejectsInvalidStructure) {
  const SymbolicTree base = case1_tree();
  std::vector<TreeNode> nodes{base.node(2), base.node(2), base.node(3)};
  EXPECT_THROW(SymbolicTree(1, base.branch_basis(), base.leaf_basis(), nodes), TreeError);
  nodes = {base.node(1), base.node(2), base.node(3)};
  nodes[1].c.pop_back();
  EXPECT_THROW(SymbolicTree(1, base.branch_basis(), base.leaf_basis(), nodes), TreeError);
}

TEST(SymbolicTree, ScalingASplitKeepsPredictions) {
  std::mt19937_64 rng(3);
  const SymbolicTree t = random_tree(rng, 2);
  const Dataset grid = case1_grid(30);
  const auto base = t.predict_leaves(grid);
  for (int n = 1; n <= 3; ++n) {
    std::vector<TreeNode> nodes;
    for (int m = 1; m <= t.num_nodes(); ++m) nodes.push_back(t.node(m));
    for (double& a : nodes[static_cast<std::size_t>(n - 1)].a) a *= 4.0;
    nodes[static_cast<std::size_t>(n - 1)].b *= 4.0;
    const SymbolicTree s(2, t.branch_basis(), t.leaf_basis(), nodes);
    EXPECT_EQ(s.predict_leaves(grid), base);
  }
}

TEST(Serialization, RoundTripIsBitExact) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const SymbolicTree t = random_tree(rng, 1 + trial % 3);
    const SymbolicTree back = deserialize_text(serialize_text(t));
    EXPECT_EQ(serialize_text(back), serialize_text(t));
    EXPECT_EQ(to_text(back), to_text(t));
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> r{u(rng), u(rng)};
      ASSERT_EQ(back.predict(r), t.predict(r));
    }
  }
}

TEST(Serialization, LeafRootIsASchemaError) {
  nlohmann::json doc = serialize(case1_tree());
  doc["nodes"][0]["kind"] = "leaf";
  EXPECT_THROW(deserialize(doc), SchemaError);
}

TEST(Serialization, ReportsThePathOfABadField) {
  nlohmann::json doc = serialize(case1_tree());
  doc["nodes"][1]["c"][0] = "one";
  try {
    deserialize(doc);
    FAIL() << "expected a schema error";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "$.nodes[1].c[0]");
  }
  EXPECT_THROW(deserialize_text("{not json"), SchemaError);
  doc = serialize(case1_tree());
  doc["basis_leaf"][1] = "x3";
  EXPECT_THROW(deserialize(doc), SchemaError);
}

TEST(SymbolicTree, PredictMatchesColumnsByName) {
  const SymbolicTree t = case1_tree();
  Dataset d;
  d.feature_names = {"x2", "x1"};
  d.x.resize(1, 2);
  d.x << 2.0, 0.0;  // x1 = 0, x2 = 2
  d.y.resize(1);
  EXPECT_DOUBLE_EQ(t.predict(d)[0], 2.0);
  d.feature_names = {"x2", "z"};
  EXPECT_THROW(t.predict(d), std::invalid_argument);
}
