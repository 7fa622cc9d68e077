#include <cmath>

#include <gtest/gtest.h>

#include "symtree/milp.hpp"

using namespace symtree;

TEST(MilpModel, AddVariable) {
  MilpModel m;
  const VarId d1 = m.add_variable("d_1", 1, 1, Integrality::kBinary);
  EXPECT_EQ(d1.value, 0);
  const VarId y = m.add_variable("y_pred_5", -1000, 1000, Integrality::kContinuous);
  EXPECT_EQ(y.value, 1);
  const VarId z = m.add_variable("z_3_2", 0, 1, Integrality::kBinary);
  EXPECT_EQ(z.value, 2);
  EXPECT_EQ(m.num_variables(), 3u);
  EXPECT_EQ(m.num_binaries(), 2u);
  EXPECT_THROW(m.add_variable("bad", 2, 1, Integrality::kContinuous), ModelError);
  EXPECT_THROW(m.add_variable("", 0, 1, Integrality::kContinuous), ModelError);
  EXPECT_THROW(m.add_variable("b", 0, 2, Integrality::kBinary), ModelError);
}

TEST(MilpModel, AddConstraint) {
  MilpModel m;
  const VarId d1 = m.add_variable("d_1", 1, 1, Integrality::kBinary);
  const VarId d2 = m.add_variable("d_2", 0, 1, Integrality::kBinary);
  const auto c = m.add_constraint({{d2, 1.0}, {d1, -1.0}}, Sense::kLessEqual, 0.0, "tree");
  EXPECT_EQ(c.value, 0);
  const auto e = m.add_constraint({}, Sense::kLessEqual, 1.0);
  EXPECT_EQ(m.constraint(e).terms.size(), 0u);
  EXPECT_THROW(m.add_constraint({{VarId{7}, 1.0}}, Sense::kEqual, 0.0), ModelError);
  EXPECT_THROW(m.add_constraint({{d1, NAN}}, Sense::kEqual, 0.0), ModelError);
  EXPECT_THROW(m.add_constraint({{d1, 1.0}, {d1, 2.0}}, Sense::kEqual, 0.0), ModelError);
  EXPECT_THROW(m.add_constraint({{d1, 1.0}}, Sense::kEqual, INFINITY), ModelError);
  const std::vector<double> x{1.0, 0.0};
  EXPECT_TRUE(check_feasibility(m, x).feasible);
}

TEST(Mps, BinarySkeleton) {
  MilpModel m("tiny");
  const VarId x = m.add_variable("x", 0, 1, Integrality::kBinary);
  m.set_objective(x, 1.0);
  m.add_constraint({{x, 1.0}}, Sense::kGreaterEqual, 0.0);
  const std::string text = write_mps(m);
  EXPECT_NE(text.find("NAME tiny"), std::string::npos);
  EXPECT_NE(text.find("'MARKER' 'INTORG'"), std::string::npos);
  EXPECT_NE(text.find("'MARKER' 'INTEND'"), std::string::npos);
  EXPECT_NE(text.find(" BV BND x"), std::string::npos);
  EXPECT_NE(text.find("N OBJ"), std::string::npos);
  EXPECT_NE(text.find("ENDATA"), std::string::npos);
}

TEST(Mps, BoundEncodings) {
  MilpModel m;
  m.add_variable("free", -kInf, kInf, Integrality::kContinuous);
  m.add_variable("neg", -kInf, 3, Integrality::kContinuous);
  m.add_variable("box", -1, 2, Integrality::kContinuous);
  m.add_variable("fixed", 4, 4, Integrality::kContinuous);
  m.add_variable("pos", 0, kInf, Integrality::kContinuous);
  const std::string text = write_mps(m);
  EXPECT_NE(text.find(" FR BND free"), std::string::npos);
  EXPECT_NE(text.find(" MI BND neg"), std::string::npos);
  EXPECT_NE(text.find(" UP BND neg 3"), std::string::npos);
  EXPECT_NE(text.find(" LO BND box -1"), std::string::npos);
  EXPECT_NE(text.find(" UP BND box 2"), std::string::npos);
  EXPECT_NE(text.find(" FX BND fixed 4"), std::string::npos);
}

TEST(Mps, DeterministicAndSanitized) {
  auto build = [] {
    MilpModel m("a b");
    const VarId x = m.add_variable("x[1]", 0, 5, Integrality::kContinuous);
    const VarId y = m.add_variable("y-2", 0, 1, Integrality::kBinary);
    m.set_objective(x, -1.0);
    m.add_constraint({{x, 1.0}, {y, 2.5}}, Sense::kLessEqual, 4.0, "cap");
    m.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::kEqual, 0.5, "link");
    return m;
  };
  const std::string a = write_mps(build());
  EXPECT_EQ(a, write_mps(build()));
  EXPECT_EQ(a.find('['), std::string::npos);
  EXPECT_NE(a.find("x_1_"), std::string::npos);
  EXPECT_NE(a.find(" E link"), std::string::npos);
  EXPECT_NE(a.find(" L cap"), std::string::npos);
  EXPECT_NE(a.find("RHS cap 4"), std::string::npos);
  EXPECT_EQ(mps_sanitize(std::string(100, 'a')).size(), 64u);
}

TEST(Mps, EmptyModelRejected) {
  MilpModel m;
  EXPECT_THROW(write_mps(m), ModelError);
}

TEST(Feasibility, DetectsViolations) {
  MilpModel m;
  const VarId x = m.add_variable("x", 0, 1, Integrality::kBinary);
  const VarId y = m.add_variable("y", 0, 10, Integrality::kContinuous);
  m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::kLessEqual, 5.0);
  EXPECT_TRUE(check_feasibility(m, std::vector<double>{1.0, 4.0}).feasible);
  EXPECT_FALSE(check_feasibility(m, std::vector<double>{1.0, 4.1}).feasible);
  EXPECT_FALSE(check_feasibility(m, std::vector<double>{0.5, 1.0}).feasible);
  EXPECT_FALSE(check_feasibility(m, std::vector<double>{0.0, 11.0}).feasible);
}
