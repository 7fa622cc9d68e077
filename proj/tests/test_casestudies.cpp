#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "symtree/casestudies.hpp"

using namespace symtree;

TEST(Case1, TruthValues) {
  EXPECT_DOUBLE_EQ(case1_truth(1, 1), 2.0);
  EXPECT_DOUBLE_EQ(case1_truth(2, 2), 6.0);
  EXPECT_DOUBLE_EQ(case1_truth(0, 0), 0.0);
  EXPECT_EQ(case1_regime(1, 1), 0);
  EXPECT_EQ(case1_regime(2, 2), 1);
}

TEST(Case1, GeneratorIsSeededAndInRange) {
  const Dataset a = gen_case1(50, 3), b = gen_case1(50, 3), c = gen_case1(50, 4);
  std::ostringstream sa, sb, sc;
  write_csv(sa, a);
  write_csv(sb, b);
  write_csv(sc, c);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_NE(sa.str(), sc.str());
  EXPECT_LE(a.x.cwiseAbs().maxCoeff(), 2.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    EXPECT_EQ(a.y[static_cast<Eigen::Index>(i)], case1_truth(a.x(static_cast<Eigen::Index>(i), 0),
                                                             a.x(static_cast<Eigen::Index>(i), 1)));
  }
}

TEST(Case1, GridHasOneHundredPoints) {
  const Dataset g = case1_grid(10);
  EXPECT_EQ(g.rows(), 100u);
  EXPECT_DOUBLE_EQ(g.x(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(g.x(99, 1), 2.0);
}

TEST(TwoTank, RightHandSide) {
  EXPECT_NEAR(two_tank_rhs(1.5, 0.2, 1.0, 0.0).first, 1.0 - 0.5 * std::sqrt(1.3), 1e-12);
  EXPECT_NEAR(two_tank_rhs(1.5, 0.2, 1.0, 0.0).first, 0.42991, 1e-5);
  EXPECT_DOUBLE_EQ(two_tank_rhs(0.7, 0.7, 0.4, 0.1).first, 0.4);
  EXPECT_NEAR(two_tank_rhs(0.2, 1.5, 0.0, 0.0).first, 0.5 * std::sqrt(1.3), 1e-12);
  EXPECT_THROW(two_tank_rhs(-0.1, 0.5, 0, 0), NegativeLevelError);
}

TEST(TwoTank, CouplingSign) {
  // Tank 1 loses through the coupling exactly when it is the higher one.
  for (double h1 : {0.1, 0.5, 1.0, 2.0}) {
    for (double h2 : {0.1, 0.5, 1.0, 2.0}) {
      const double coupling = two_tank_rhs(h1, h2, 0.0, 0.0).first;
      if (h1 > h2) EXPECT_LT(coupling, 0.0);
      if (h1 < h2) EXPECT_GT(coupling, 0.0);
    }
  }
}

TEST(TwoTank, TrainingTrajectoryCoversBothRegimes) {
  const Trajectory tr = simulate_two_tank({0.2, 1.5}, default_training_schedule(), 8.0, 0.1);
  ASSERT_EQ(tr.size(), 81u);
  int above = 0, below = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    (tr.h1[i] > tr.h2[i] ? above : below) += 1;
    const auto [d1, d2] = two_tank_rhs(tr.h1[i], tr.h2[i], tr.f1[i], tr.f2[i]);
    EXPECT_EQ(tr.dh1[i], d1);
    EXPECT_EQ(tr.dh2[i], d2);
  }
  EXPECT_GT(above, 0);
  EXPECT_GT(below, 0);
}

TEST(TwoTank, EmptyTanksStayEmpty) {
  const FlowSchedule none({{0.0, 0.0, 0.0}});
  const Trajectory tr = simulate_two_tank({0.0, 0.0}, none, 5.0, 0.1);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_EQ(tr.h1[i], 0.0);
    EXPECT_EQ(tr.h2[i], 0.0);
  }
}

TEST(TwoTank, TestRolloutStaysNonnegative) {
  const Trajectory tr = simulate_two_tank({0.1, 1.2}, default_test_schedule(), 20.0, 0.05);
  EXPECT_EQ(tr.size(), 401u);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_GE(tr.h1[i], 0.0);
    EXPECT_GE(tr.h2[i], 0.0);
  }
}

TEST(TwoTank, DrainingModelIsRejectedOrClamped) {
  auto drain = [](double, double, double, double, double) { return -5.0; };
  EXPECT_THROW(simulate_two_tank({0.5, 0.5}, default_test_schedule(), 2.0, 0.05, drain),
               NegativeLevelError);
  const Trajectory tr = simulate_two_tank({0.5, 0.5}, default_test_schedule(), 2.0, 0.05, drain,
                                          LevelPolicy::kClampAtZero);
  EXPECT_EQ(tr.h1.back(), 0.0);
}

TEST(TwoTank, ScheduleValidation) {
  EXPECT_THROW(FlowSchedule({}), std::invalid_argument);
  EXPECT_THROW(FlowSchedule({{1.0, 0.1, 0.1}}), std::invalid_argument);
  EXPECT_THROW(FlowSchedule({{0.0, -0.1, 0.1}}), std::invalid_argument);
  EXPECT_THROW(FlowSchedule({{0.0, 0.1, 0.1}, {0.0, 0.2, 0.2}}), std::invalid_argument);
  const FlowSchedule s = default_training_schedule();
  EXPECT_EQ(s.at(2.0).first, 0.2);
  EXPECT_EQ(s.at(1.999).first, 1.0);
}

TEST(Viscosity, LawValues) {
  const ViscosityLaw law;
  EXPECT_NEAR(law.log_eta(law.m_c), 4.0, 1e-12);
  EXPECT_NEAR(law.log_eta(1e3), 2.51, 0.01);
  EXPECT_NEAR(law.log_eta(1e6), 9.12, 0.01);
  EXPECT_NEAR(law.low_intercept(), -0.49, 0.01);
  EXPECT_NEAR(law.high_intercept(), -11.28, 0.01);
  // Both branches agree at the crossover.
  const double lm = 4.494;
  EXPECT_NEAR(law.low_slope() * lm + law.low_intercept(), law.high_slope() * lm + law.high_intercept(), 0.01);
}

TEST(Viscosity, NoiseKeepsTheInputs) {
  const Dataset clean = gen_viscosity(40, 2), noisy = gen_viscosity(40, 2, 0.2);
  EXPECT_EQ(clean.x, noisy.x);
  EXPECT_NE(clean.y, noisy.y);
  const double spread = (clean.y - noisy.y).cwiseAbs().maxCoeff();
  EXPECT_LT(spread, 1.5);
  EXPECT_THROW(gen_viscosity(40, 2, -1.0), std::invalid_argument);
}
