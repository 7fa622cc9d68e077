#pragma once

// Ground-truth data generators: a two-regime algebraic surface, an
// interacting two-tank system and a piecewise viscosity scaling law.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "symtree/dataset.hpp"

namespace symtree {

// ---------------------------------------------------------------- case 1

inline constexpr double kCase1Radius2 = 2.5;

/// 0 inside the disk x1^2 + x2^2 <= 2.5, 1 outside.
inline int case1_regime(double x1, double x2) {
  return x1 * x1 + x2 * x2 <= kCase1Radius2 ? 0 : 1;
}

inline double case1_truth(double x1, double x2) {
  return case1_regime(x1, x2) == 0 ? x1 * x1 + x2 * x2 : x1 * x1 + x2;
}

inline Dataset gen_case1(std::size_t n, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  if (n < 1) throw std::invalid_argument("gen_case1: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Dataset d;
  d.feature_names = {"x1", "x2"};
  d.x.resize(static_cast<Eigen::Index>(n), 2);
  d.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    d.x(i, 0) = u(rng);
    d.x(i, 1) = u(rng);
    d.y[i] = case1_truth(d.x(i, 0), d.x(i, 1));
  }
  return d;
}

/// g x g grid over [lo, hi]^2, x1 varying slowest.
inline Dataset case1_grid(int g, double lo = -2.0, double hi = 2.0) {
  Dataset d;
  d.feature_names = {"x1", "x2"};
  d.x.resize(g * g, 2);
  d.y.resize(g * g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double x1 = lo + (hi - lo) * i / (g - 1);
      const double x2 = lo + (hi - lo) * j / (g - 1);
      d.x(i * g + j, 0) = x1;
      d.x(i * g + j, 1) = x2;
      d.y[i * g + j] = case1_truth(x1, x2);
    }
  }
  return d;
}

// -------------------------------------------------------------- two tank

inline constexpr double kTankCv = 0.5;

class NegativeLevelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Returns (dh1/dt, dh2/dt) with A1 = 1 and both valve constants 0.5.
inline std::pair<double, double> two_tank_rhs(double h1, double h2, double f1, double f2) {
  if (h1 < 0.0 || h2 < 0.0) {
    std::ostringstream msg;
    msg << "negative tank level (h1=" << h1 << ", h2=" << h2 << ")";
    throw NegativeLevelError(msg.str());
  }
  const double q = kTankCv * std::sqrt(std::fabs(h1 - h2));
  const double out = kTankCv * std::sqrt(h2);
  if (h1 > h2) return {f1 - q, f2 + q - out};
  return {f1 + q, f2 - q - out};
}

/// 0 when tank 1 drains into tank 2 (h1 > h2), 1 otherwise.
inline int two_tank_regime(double h1, double h2) { return h1 > h2 ? 0 : 1; }

struct FlowSegment {
  double start;
  double f1;
  double f2;
};

/// Piecewise-constant inlet flows.
class FlowSchedule {
 public:
  explicit FlowSchedule(std::vector<FlowSegment> segments) : seg_(std::move(segments)) {
    if (seg_.empty() || seg_.front().start > 0.0) {
      throw std::invalid_argument("flow schedule must start at t = 0");
    }
    for (std::size_t i = 0; i < seg_.size(); ++i) {
      if (seg_[i].f1 < 0.0 || seg_[i].f2 < 0.0) {
        throw std::invalid_argument("flow levels must be nonnegative");
      }
      if (i > 0 && !(seg_[i].start > seg_[i - 1].start)) {
        throw std::invalid_argument("flow segment start times must increase");
      }
    }
  }

  std::pair<double, double> at(double t) const {
    std::size_t k = 0;
    // Small slack so that grid times landing on a switch use the new level.
    while (k + 1 < seg_.size() && seg_[k + 1].start <= t + 1e-9) ++k;
    return {seg_[k].f1, seg_[k].f2};
  }

  const std::vector<FlowSegment>& segments() const { return seg_; }

 private:
  std::vector<FlowSegment> seg_;
};

inline FlowSchedule default_training_schedule() {
  return FlowSchedule({{0.0, 1.0, 0.3}, {2.0, 0.2, 1.2}, {4.0, 1.4, 0.1}, {6.0, 0.6, 0.9}});
}

inline FlowSchedule default_test_schedule() {
  return FlowSchedule({{0.0, 0.8, 0.4}, {5.0, 0.3, 1.0}, {10.0, 1.2, 0.2}, {15.0, 0.5, 0.7}});
}

struct Trajectory {
  std::vector<double> t;
  std::vector<double> h1, h2;
  std::vector<double> f1, f2;
  std::vector<double> dh1, dh2;

  std::size_t size() const { return t.size(); }

  /// Features h1, h2, F1, F2 with target dh1/dt, first `count` samples.
  Dataset tank1_dataset(std::size_t count) const {
    count = std::min(count, size());
    Dataset d;
    d.feature_names = {"h1", "h2", "F1", "F2"};
    d.x.resize(static_cast<Eigen::Index>(count), 4);
    d.y.resize(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      d.x(r, 0) = h1[i];
      d.x(r, 1) = h2[i];
      d.x(r, 2) = f1[i];
      d.x(r, 3) = f2[i];
      d.y[r] = dh1[i];
    }
    return d;
  }

  void write_csv(std::ostream& out) const {
    out << "t,h1,h2,F1,F2,dh2dt,y\n";
    for (std::size_t i = 0; i < size(); ++i) {
      out << format_g17(t[i]) << ',' << format_g17(h1[i]) << ',' << format_g17(h2[i]) << ','
          << format_g17(f1[i]) << ',' << format_g17(f2[i]) << ',' << format_g17(dh2[i]) << ','
          << format_g17(dh1[i]) << '\n';
    }
  }
};

/// What a rollout does when a level goes below zero. Learned models may
/// drain a tank that the true system would not.
enum class LevelPolicy { kReject, kClampAtZero };

namespace detail {

inline double clamp_level(double h, double t, LevelPolicy policy = LevelPolicy::kReject) {
  if (h < -1e-9 && policy == LevelPolicy::kReject) {
    std::ostringstream msg;
    msg << "tank level " << h << " below zero at t=" << t;
    throw NegativeLevelError(msg.str());
  }
  return std::max(h, 0.0);
}

}  // namespace detail

/// Classic RK4 on a uniform grid. `dh1_model`, if given, replaces the first
/// tank's right-hand side (the second tank always uses the true equation).
/// Inputs are held at their value at the start of each step.
template <typename Dh1>
Trajectory simulate_two_tank(std::pair<double, double> initial, const FlowSchedule& schedule,
                             double t_end, double dt, Dh1&& dh1_model,
                             LevelPolicy policy = LevelPolicy::kReject) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  Trajectory tr;
  double h1 = initial.first, h2 = initial.second;
  auto rhs = [&](double a, double b, double f1, double f2, double t) {
    a = detail::clamp_level(a, t, policy);
    b = detail::clamp_level(b, t, policy);
    const auto [d1, d2] = two_tank_rhs(a, b, f1, f2);
    return std::pair<double, double>{dh1_model(a, b, f1, f2, d1), d2};
  };
  for (std::size_t s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const auto [f1, f2] = schedule.at(t);
    h1 = detail::clamp_level(h1, t, policy);
    h2 = detail::clamp_level(h2, t, policy);
    const auto [d1, d2] = rhs(h1, h2, f1, f2, t);
    tr.t.push_back(t);
    tr.h1.push_back(h1);
    tr.h2.push_back(h2);
    tr.f1.push_back(f1);
    tr.f2.push_back(f2);
    tr.dh1.push_back(d1);
    tr.dh2.push_back(d2);
    if (s == steps) break;
    const auto k1 = std::pair<double, double>{d1, d2};
    const auto k2 = rhs(h1 + 0.5 * dt * k1.first, h2 + 0.5 * dt * k1.second, f1, f2, t);
    const auto k3 = rhs(h1 + 0.5 * dt * k2.first, h2 + 0.5 * dt * k2.second, f1, f2, t);
    const auto k4 = rhs(h1 + dt * k3.first, h2 + dt * k3.second, f1, f2, t);
    h1 += dt / 6.0 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    h2 += dt / 6.0 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
  }
  return tr;
}

inline Trajectory simulate_two_tank(std::pair<double, double> initial, const FlowSchedule& schedule,
                                    double t_end, double dt) {
  return simulate_two_tank(initial, schedule, t_end, dt,
                           [](double, double, double, double, double truth) { return truth; });
}

// ------------------------------------------------------------- viscosity

struct ViscosityLaw {
  double m_c = 31200.0;
  double eta_c = 1e4;

  double log_mc() const { return std::log10(m_c); }
  double low_slope() const { return 1.0; }
  double high_slope() const { return 3.4; }
  double low_intercept() const { return std::log10(eta_c) - log_mc(); }
  double high_intercept() const { return std::log10(eta_c) - 3.4 * log_mc(); }

  double log_eta(double m) const {
    const double lm = std::log10(m);
    return lm < log_mc() ? low_slope() * lm + low_intercept()
                         : high_slope() * lm + high_intercept();
  }
  int regime(double m) const { return std::log10(m) < log_mc() ? 0 : 1; }
};

/// Feature M with log10 M uniform on (3, 6); target log10 eta0 plus N(0, sigma^2).
inline Dataset gen_viscosity(std::size_t n, std::uint64_t seed, double sigma = 0.0,
                             const ViscosityLaw& law = {}) {
  if (n < 2) throw std::invalid_argument("gen_viscosity: n must be >= 2");
  if (sigma < 0) throw std::invalid_argument("gen_viscosity: sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(3.0, 6.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.feature_names = {"M"};
  d.x.resize(static_cast<Eigen::Index>(n), 1);
  d.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double m = std::pow(10.0, u(rng));
    d.x(i, 0) = m;
    d.y[i] = law.log_eta(m);
  }
  // Noise drawn after the inputs so a noisy set shares its inputs with the
  // noiseless one for the same seed.
  if (sigma > 0) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) d.y[i] += sigma * noise(rng);
  }
  return d;
}

}  // namespace symtree
