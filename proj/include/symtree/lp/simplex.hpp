#pragma once

// Bounded-variable revised simplex. Rows are turned into equalities with one
// logical column each (A x - s = 0, row bounds become bounds on s). The dual
// simplex does the bulk of the work, warm-starting from whatever basis is
// loaded; a primal pass afterwards removes cost perturbation and artificial
// bounds and detects unboundedness.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "symtree/lp/basis_factor.hpp"
#include "symtree/milp.hpp"

namespace symtree::lp {

enum class VarStatus : std::uint8_t {
  kBasic,
  kAtLower,
  kAtUpper,
  kAtZero,      // free nonbasic, value 0
  kSuperbasic,  // nonbasic strictly between bounds
};

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 50;
  std::int64_t iteration_limit = 2'000'000;
  bool scale = true;
  double perturbation = 1e-7;
  int stall_limit = 300;
  // Stop the dual phase once the (unperturbed) objective of the current dual
  // feasible basis exceeds this value.
  double objective_cutoff = kInf;
};

class LpSolver {
 public:
  explicit LpSolver(const MilpModel& model, LpOptions options = {})
      : opt_(options) {
    n_ = model.num_variables();
    m_ = model.num_constraints();
    total_ = n_ + m_;

    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (std::size_t r = 0; r < m_; ++r) {
      for (const auto& t : model.constraint(r).terms) {
        if (t.coef != 0.0) {
          cols[static_cast<std::size_t>(t.var.value)].emplace_back(
              static_cast<int>(r), t.coef);
        }
      }
    }
    row_scale_.assign(m_, 1.0);
    col_scale_.assign(n_, 1.0);
    if (opt_.scale) compute_scaling(cols);

    col_start_.assign(n_ + 1, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      col_start_[j + 1] = col_start_[j] + static_cast<int>(cols[j].size());
    }
    col_row_.resize(static_cast<std::size_t>(col_start_[n_]));
    col_val_.resize(col_row_.size());
    std::vector<int> row_count(m_, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      int p = col_start_[j];
      for (const auto& [r, a] : cols[j]) {
        col_row_[static_cast<std::size_t>(p)] = r;
        col_val_[static_cast<std::size_t>(p)] =
            a * row_scale_[static_cast<std::size_t>(r)] * col_scale_[j];
        ++row_count[static_cast<std::size_t>(r)];
        ++p;
      }
    }
    row_start_.assign(m_ + 1, 0);
    for (std::size_t r = 0; r < m_; ++r) row_start_[r + 1] = row_start_[r] + row_count[r];
    row_col_.resize(col_row_.size());
    row_val_.resize(col_row_.size());
    std::vector<int> fill(row_start_.begin(), row_start_.end() - 1);
    for (std::size_t j = 0; j < n_; ++j) {
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        const auto r = static_cast<std::size_t>(col_row_[static_cast<std::size_t>(p)]);
        row_col_[static_cast<std::size_t>(fill[r])] = static_cast<int>(j);
        row_val_[static_cast<std::size_t>(fill[r])] = col_val_[static_cast<std::size_t>(p)];
        ++fill[r];
      }
    }

    lb_.resize(total_);
    ub_.resize(total_);
    cost_orig_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      const auto& v = model.variable(j);
      lb_[j] = v.lower / col_scale_[j];
      ub_[j] = v.upper / col_scale_[j];
      cost_orig_[j] = v.objective * col_scale_[j];
    }
    for (std::size_t r = 0; r < m_; ++r) {
      const auto& row = model.constraint(r);
      const double rhs = row.rhs * row_scale_[r];
      switch (row.sense) {
        case Sense::kLessEqual:
          lb_[n_ + r] = -kInf;
          ub_[n_ + r] = rhs;
          break;
        case Sense::kGreaterEqual:
          lb_[n_ + r] = rhs;
          ub_[n_ + r] = kInf;
          break;
        case Sense::kEqual:
          lb_[n_ + r] = rhs;
          ub_[n_ + r] = rhs;
          break;
      }
    }
    work_lb_ = lb_;
    work_ub_ = ub_;
    cost_ = cost_orig_;
    x_.assign(total_, 0.0);
    d_.assign(total_, 0.0);
    reset_basis();
  }

  std::size_t num_cols() const { return n_; }
  std::size_t num_rows() const { return m_; }
  const LpOptions& options() const { return opt_; }
  void set_objective_cutoff(double cutoff) { opt_.objective_cutoff = cutoff; }

  double col_lower(std::size_t j) const { return lb_[j] * col_scale_[j]; }
  double col_upper(std::size_t j) const { return ub_[j] * col_scale_[j]; }

  /// Changes the bounds of a structural column (original units). The basis is
  /// kept; the next solve repairs primal feasibility with the dual simplex.
  void set_col_bounds(std::size_t j, double lower, double upper) {
    lb_[j] = lower / col_scale_[j];
    ub_[j] = upper / col_scale_[j];
    work_lb_[j] = lb_[j];
    work_ub_[j] = ub_[j];
  }

  void reset_basis() {
    status_.assign(total_, VarStatus::kAtLower);
    head_.resize(m_);
    pos_.assign(total_, -1);
    for (std::size_t r = 0; r < m_; ++r) {
      head_[r] = static_cast<int>(n_ + r);
      pos_[n_ + r] = static_cast<int>(r);
      status_[n_ + r] = VarStatus::kBasic;
    }
    weights_.assign(m_, 1.0);
    weights_exact_ = true;
    factor_ok_ = false;
  }

  const std::vector<VarStatus>& basis() const { return status_; }

  void set_basis(const std::vector<VarStatus>& basis) {
    if (factor_ok_ && basis.size() == status_.size()) {
      bool same = true;
      for (std::size_t j = 0; j < total_ && same; ++j) {
        same = (basis[j] == VarStatus::kBasic) == (status_[j] == VarStatus::kBasic);
      }
      if (same) {
        // Same basic set: keep the factorization and the pricing weights.
        status_ = basis;
        return;
      }
    }
    status_ = basis;
    int r = 0;
    std::fill(pos_.begin(), pos_.end(), -1);
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic) {
        if (r >= static_cast<int>(m_)) {
          status_[j] = VarStatus::kAtLower;
          continue;
        }
        head_[static_cast<std::size_t>(r)] = static_cast<int>(j);
        pos_[j] = r++;
      }
    }
    // Pad a short basis with logicals.
    for (std::size_t i = 0; r < static_cast<int>(m_) && i < m_; ++i) {
      if (status_[n_ + i] != VarStatus::kBasic) {
        status_[n_ + i] = VarStatus::kBasic;
        head_[static_cast<std::size_t>(r)] = static_cast<int>(n_ + i);
        pos_[n_ + i] = r++;
      }
    }
    weights_.assign(m_, 1.0);
    weights_exact_ = false;
    factor_ok_ = false;
  }

  /// Runs the simplex from the current basis.
  SolveStatus solve() {
    start_ = std::chrono::steady_clock::now();
    cutoff_hit_ = false;
    if (factor_ok_ && factor_.num_updates() < opt_.refactor_interval) {
      compute_primal();
      compute_duals();
    } else if (!refactor()) {
      return SolveStatus::kNumericalFailure;
    }
    SolveStatus st = SolveStatus::kOptimal;
    for (int round = 0; round < 4; ++round) {
      st = run_dual_then_primal();
      if (st != SolveStatus::kOptimal) break;
      if (verify_primal()) break;
      // Drift: rebuild from a fresh factorization and go again.
      if (!refactor()) return SolveStatus::kNumericalFailure;
      if (round == 3) st = SolveStatus::kNumericalFailure;
    }
    objective_ = 0.0;
    for (std::size_t j = 0; j < n_; ++j) objective_ += cost_orig_[j] * x_[j];
    return st;
  }

  /// True when the last dual phase stopped on the objective cutoff.
  bool cutoff_hit() const { return cutoff_hit_; }

  std::vector<double> primal() const {
    std::vector<double> out(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = x_[j] * col_scale_[j];
    return out;
  }

  double objective() const { return objective_; }
  std::int64_t iterations() const { return iterations_; }

 private:
  // ---------------------------------------------------------------- scaling
  void compute_scaling(const std::vector<std::vector<std::pair<int, double>>>& cols) {
    std::vector<double> rmax(m_), rmin(m_);
    for (int pass = 0; pass < 6; ++pass) {
      std::fill(rmax.begin(), rmax.end(), 0.0);
      std::fill(rmin.begin(), rmin.end(), kInf);
      for (std::size_t j = 0; j < n_; ++j) {
        for (const auto& [r, a] : cols[j]) {
          const double v = std::fabs(a) * col_scale_[j];
          const auto ri = static_cast<std::size_t>(r);
          rmax[ri] = std::max(rmax[ri], v);
          rmin[ri] = std::min(rmin[ri], v);
        }
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (rmax[r] > 0.0) row_scale_[r] = 1.0 / std::sqrt(rmax[r] * rmin[r]);
      }
      for (std::size_t j = 0; j < n_; ++j) {
        double cmax = 0.0, cmin = kInf;
        for (const auto& [r, a] : cols[j]) {
          const double v = std::fabs(a) * row_scale_[static_cast<std::size_t>(r)];
          cmax = std::max(cmax, v);
          cmin = std::min(cmin, v);
        }
        if (cmax > 0.0) col_scale_[j] = 1.0 / std::sqrt(cmax * cmin);
      }
    }
    // Column equilibration, then snap everything to powers of two so that
    // scaling is exact in floating point.
    for (std::size_t j = 0; j < n_; ++j) {
      double cmax = 0.0;
      for (const auto& [r, a] : cols[j]) {
        cmax = std::max(cmax, std::fabs(a) * row_scale_[static_cast<std::size_t>(r)]);
      }
      if (cmax > 0.0) col_scale_[j] = 1.0 / cmax;
    }
    auto snap = [](double s) { return std::exp2(std::round(std::log2(s))); };
    for (auto& s : row_scale_) s = snap(s);
    for (auto& s : col_scale_) s = snap(s);
  }

  // ------------------------------------------------------- linear algebra
  void add_column(std::size_t j, double mult, Eigen::VectorXd& v) const {
    if (j < n_) {
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        v[col_row_[static_cast<std::size_t>(p)]] += mult * col_val_[static_cast<std::size_t>(p)];
      }
    } else {
      v[static_cast<Eigen::Index>(j - n_)] -= mult;
    }
  }

  double dot_column(std::size_t j, const Eigen::VectorXd& v) const {
    if (j < n_) {
      double s = 0.0;
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        s += v[col_row_[static_cast<std::size_t>(p)]] * col_val_[static_cast<std::size_t>(p)];
      }
      return s;
    }
    return -v[static_cast<Eigen::Index>(j - n_)];
  }

  bool factorize_head() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(col_row_.size() + m_);
    for (std::size_t r = 0; r < m_; ++r) {
      const auto j = static_cast<std::size_t>(head_[r]);
      if (j < n_) {
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
          trip.emplace_back(col_row_[static_cast<std::size_t>(p)], static_cast<int>(r),
                            col_val_[static_cast<std::size_t>(p)]);
        }
      } else {
        trip.emplace_back(static_cast<int>(j - n_), static_cast<int>(r), -1.0);
      }
    }
    BasisFactor::SparseMatrix b(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    return factor_.factorize(b);
  }

  // Swaps dependent basis columns for logicals until the basis is regular.
  // Basic logicals are unit columns, so only the structural columns restricted
  // to rows no basic logical covers need a rank-revealing factorization.
  void repair_basis() {
    std::vector<int> free_row(m_, -1);  // original row -> reduced row index
    std::vector<int> rows;
    std::vector<bool> covered(m_, false);
    std::vector<std::size_t> structural;  // positions in head_
    for (std::size_t r = 0; r < m_; ++r) {
      const auto j = static_cast<std::size_t>(head_[r]);
      if (j >= n_) {
        covered[j - n_] = true;
      } else {
        structural.push_back(r);
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (!covered[i]) {
        free_row[i] = static_cast<int>(rows.size());
        rows.push_back(static_cast<int>(i));
      }
    }
    const auto k = static_cast<Eigen::Index>(structural.size());
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), k);
    Eigen::VectorXd col(static_cast<Eigen::Index>(m_));
    for (Eigen::Index c = 0; c < k; ++c) {
      col.setZero();
      add_column(static_cast<std::size_t>(head_[structural[static_cast<std::size_t>(c)]]), 1.0, col);
      for (std::size_t q = 0; q < rows.size(); ++q) dense(static_cast<Eigen::Index>(q), c) = col[rows[q]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
    lu.setThreshold(1e-11);
    const auto rank = lu.rank();
    const auto& q = lu.permutationQ().indices();
    const auto& p = lu.permutationP().indices();
    // P*S*Q = LU: the first `rank` columns of S*Q stay; rows p[rank..] get logicals.
    std::vector<int> uncovered;
    for (Eigen::Index i = rank; i < p.size(); ++i) uncovered.push_back(rows[static_cast<std::size_t>(p[i])]);
    std::size_t u = 0;
    for (Eigen::Index c = rank; c < k && u < uncovered.size(); ++c) {
      const auto r = structural[static_cast<std::size_t>(q[c])];
      const auto out = static_cast<std::size_t>(head_[r]);
      const auto in = n_ + static_cast<std::size_t>(uncovered[u++]);
      status_[out] = VarStatus::kAtLower;
      pos_[out] = -1;
      head_[r] = static_cast<int>(in);
      pos_[in] = static_cast<int>(r);
      status_[in] = VarStatus::kBasic;
    }
    weights_.assign(m_, 1.0);
    weights_exact_ = false;
  }

  bool refactor() {
    if (!factorize_head()) {
      repair_basis();
      if (!factorize_head()) {
        reset_basis();
        if (!factorize_head()) return false;
      }
      fix_nonbasic_values();
    }
    factor_ok_ = true;
    compute_primal();
    compute_duals();
    return true;
  }

  void compute_primal() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] != VarStatus::kBasic && x_[j] != 0.0) add_column(j, -x_[j], rhs);
    }
    factor_.ftran(rhs);
    for (std::size_t r = 0; r < m_; ++r) x_[static_cast<std::size_t>(head_[r])] = rhs[static_cast<Eigen::Index>(r)];
  }

  void compute_duals() {
    Eigen::VectorXd y(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) y[static_cast<Eigen::Index>(r)] = cost_[static_cast<std::size_t>(head_[r])];
    factor_.btran(y);
    for (std::size_t j = 0; j < total_; ++j) {
      d_[j] = status_[j] == VarStatus::kBasic ? 0.0 : cost_[j] - dot_column(j, y);
    }
  }

  void compute_exact_weights() {
    Eigen::VectorXd e(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) {
      e.setZero();
      e[static_cast<Eigen::Index>(r)] = 1.0;
      factor_.btran(e);
      weights_[r] = std::max(e.squaredNorm(), 1e-12);
    }
    weights_exact_ = true;
  }

  // Puts nonbasic values onto the bound named by their status.
  void fix_nonbasic_values() {
    for (std::size_t j = 0; j < total_; ++j) {
      switch (status_[j]) {
        case VarStatus::kAtLower:
          if (std::isfinite(work_lb_[j])) {
            x_[j] = work_lb_[j];
          } else if (std::isfinite(work_ub_[j])) {
            status_[j] = VarStatus::kAtUpper;
            x_[j] = work_ub_[j];
          } else {
            status_[j] = VarStatus::kAtZero;
            x_[j] = 0.0;
          }
          break;
        case VarStatus::kAtUpper:
          if (std::isfinite(work_ub_[j])) {
            x_[j] = work_ub_[j];
          } else if (std::isfinite(work_lb_[j])) {
            status_[j] = VarStatus::kAtLower;
            x_[j] = work_lb_[j];
          } else {
            status_[j] = VarStatus::kAtZero;
            x_[j] = 0.0;
          }
          break;
        case VarStatus::kAtZero:
          x_[j] = 0.0;
          break;
        default:
          break;
      }
    }
  }

  // --------------------------------------------------- dual feasibility
  static constexpr double kBigBox = 1e6;

  // Places every nonbasic variable on the bound its reduced cost asks for,
  // adding a temporary box bound where the needed bound is infinite.
  // Returns true if any nonbasic value moved.
  bool make_dual_feasible() {
    bool moved = false;
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      const double old = x_[j];
      const double lo = work_lb_[j], hi = work_ub_[j];
      if (lo == hi) {
        status_[j] = VarStatus::kAtLower;
        x_[j] = lo;
      } else if (d_[j] > opt_.dual_tol) {
        if (!std::isfinite(lo)) {
          work_lb_[j] = (std::isfinite(hi) ? hi : 0.0) - kBigBox;
          artificial_ = true;
        }
        status_[j] = VarStatus::kAtLower;
        x_[j] = work_lb_[j];
      } else if (d_[j] < -opt_.dual_tol) {
        if (!std::isfinite(hi)) {
          work_ub_[j] = (std::isfinite(lo) ? lo : 0.0) + kBigBox;
          artificial_ = true;
        }
        status_[j] = VarStatus::kAtUpper;
        x_[j] = work_ub_[j];
      } else {
        // Zero reduced cost: any bound is dual feasible.
        if (status_[j] == VarStatus::kAtUpper && std::isfinite(hi)) {
          x_[j] = hi;
        } else if (std::isfinite(lo)) {
          status_[j] = VarStatus::kAtLower;
          x_[j] = lo;
        } else if (std::isfinite(hi)) {
          status_[j] = VarStatus::kAtUpper;
          x_[j] = hi;
        } else {
          status_[j] = VarStatus::kAtZero;
          x_[j] = 0.0;
        }
      }
      if (x_[j] != old) moved = true;
    }
    return moved;
  }

  void perturb_costs() {
    cost_ = cost_orig_;
    if (opt_.perturbation <= 0.0) return;
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic || work_lb_[j] == work_ub_[j]) continue;
      // Deterministic pseudo-random magnitude in [0.5, 1).
      std::uint64_t h = (j + 1) * 0x9E3779B97F4A7C15ull;
      h ^= h >> 31;
      h *= 0xBF58476D1CE4E5B9ull;
      h ^= h >> 29;
      const double u = 0.5 + 0.5 * static_cast<double>(h >> 11) * 0x1.0p-53;
      const double xi = opt_.perturbation * u * (1.0 + std::fabs(cost_orig_[j]));
      if (status_[j] == VarStatus::kAtLower) {
        cost_[j] += xi;
        d_[j] += xi;
      } else if (status_[j] == VarStatus::kAtUpper) {
        cost_[j] -= xi;
        d_[j] -= xi;
      }
    }
  }

  void enlarge_artificial_bounds(double factor) {
    for (std::size_t j = 0; j < total_; ++j) {
      if (!std::isfinite(lb_[j]) && std::isfinite(work_lb_[j])) {
        const double anchor = std::isfinite(ub_[j]) ? ub_[j] : 0.0;
        work_lb_[j] = anchor - (anchor - work_lb_[j]) * factor;
        if (status_[j] == VarStatus::kAtLower) x_[j] = work_lb_[j];
      }
      if (!std::isfinite(ub_[j]) && std::isfinite(work_ub_[j])) {
        const double anchor = std::isfinite(lb_[j]) ? lb_[j] : 0.0;
        work_ub_[j] = anchor + (work_ub_[j] - anchor) * factor;
        if (status_[j] == VarStatus::kAtUpper) x_[j] = work_ub_[j];
      }
    }
  }

  bool artificial_at_bound() const {
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kAtLower && !std::isfinite(lb_[j])) return true;
      if (status_[j] == VarStatus::kAtUpper && !std::isfinite(ub_[j])) return true;
    }
    return false;
  }

  // Drops the temporary bounds; variables sitting on them become superbasic.
  void remove_artificial_bounds() {
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kAtLower && !std::isfinite(lb_[j])) {
        status_[j] = VarStatus::kSuperbasic;
      } else if (status_[j] == VarStatus::kAtUpper && !std::isfinite(ub_[j])) {
        status_[j] = VarStatus::kSuperbasic;
      }
    }
    work_lb_ = lb_;
    work_ub_ = ub_;
    artificial_ = false;
  }

  double current_objective(const std::vector<double>& costs) const {
    double obj = 0.0;
    for (std::size_t j = 0; j < total_; ++j) obj += costs[j] * x_[j];
    return obj;
  }

  bool out_of_iterations() const { return iterations_ >= iteration_cap_; }

  // ------------------------------------------------------------ phases
  SolveStatus run_dual_then_primal() {
    iteration_cap_ = iterations_ + opt_.iteration_limit;
    work_lb_ = lb_;
    work_ub_ = ub_;
    artificial_ = false;
    cost_ = cost_orig_;
    compute_duals();
    make_dual_feasible();
    perturb_costs();
    compute_primal();
    if (!weights_exact_ && m_ <= 200) compute_exact_weights();

    SolveStatus st = dual_phase();
    if (st != SolveStatus::kOptimal) return st;

    for (int attempt = 0; attempt < 6; ++attempt) {
      remove_artificial_bounds();
      cost_ = cost_orig_;
      compute_duals();
      st = primal_phase();
      if (st != SolveStatus::kOptimal) return st;
      if (max_primal_infeasibility() <= opt_.primal_tol * 10) return SolveStatus::kOptimal;
      // Primal pass drifted out of feasibility: dual phase again.
      weights_.assign(m_, 1.0);
      weights_exact_ = false;
      make_dual_feasible();
      compute_primal();
      st = dual_phase();
      if (st != SolveStatus::kOptimal) return st;
    }
    return SolveStatus::kNumericalFailure;
  }

  double infeasibility(std::size_t j) const {
    if (x_[j] < work_lb_[j]) return work_lb_[j] - x_[j];
    if (x_[j] > work_ub_[j]) return x_[j] - work_ub_[j];
    return 0.0;
  }

  double max_primal_infeasibility() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      worst = std::max(worst, infeasibility(static_cast<std::size_t>(head_[r])));
    }
    return worst;
  }

  void compute_pivot_row(const Eigen::VectorXd& rho, std::vector<double>& alpha) const {
    std::fill(alpha.begin(), alpha.end(), 0.0);
    std::size_t nnz = 0;
    for (Eigen::Index i = 0; i < rho.size(); ++i) nnz += rho[i] != 0.0;
    if (nnz * 8 < m_) {
      for (std::size_t i = 0; i < m_; ++i) {
        const double ri = rho[static_cast<Eigen::Index>(i)];
        if (ri == 0.0) continue;
        for (int p = row_start_[i]; p < row_start_[i + 1]; ++p) {
          alpha[static_cast<std::size_t>(row_col_[static_cast<std::size_t>(p)])] +=
              ri * row_val_[static_cast<std::size_t>(p)];
        }
        alpha[n_ + i] = -ri;
      }
    } else {
      for (std::size_t j = 0; j < n_; ++j) {
        if (status_[j] != VarStatus::kBasic) alpha[j] = dot_column(j, rho);
      }
      for (std::size_t i = 0; i < m_; ++i) alpha[n_ + i] = -rho[static_cast<Eigen::Index>(i)];
    }
    for (std::size_t r = 0; r < m_; ++r) alpha[static_cast<std::size_t>(head_[r])] = 0.0;
  }

  SolveStatus dual_phase() {
    std::vector<double> alpha_row(total_);
    Eigen::VectorXd rho(static_cast<Eigen::Index>(m_));
    Eigen::VectorXd col(static_cast<Eigen::Index>(m_));
    Eigen::VectorXd tau(static_cast<Eigen::Index>(m_));
    double best_obj = -kInf;
    int stall = 0;
    bool bland = false;
    int enlargements = 0;

    for (;;) {
      if (out_of_iterations()) return SolveStatus::kLimitReached;
      if (factor_.num_updates() >= opt_.refactor_interval) {
        if (!refactor()) return SolveStatus::kNumericalFailure;
        if (make_dual_feasible()) compute_primal();
      }

      if (opt_.objective_cutoff < kInf && !artificial_) {
        // The unperturbed objective of a dual feasible basis is not a bound
        // on its own; only stop when the perturbation cannot explain it.
        const double obj = current_objective(cost_orig_);
        if (obj > opt_.objective_cutoff + 1e-6 * (1.0 + std::fabs(obj))) {
          double pert = 0.0;
          for (std::size_t j = 0; j < total_; ++j) {
            pert += std::fabs((cost_[j] - cost_orig_[j]) * x_[j]);
          }
          if (obj - pert > opt_.objective_cutoff) {
            cutoff_hit_ = true;
            return SolveStatus::kInfeasible;
          }
        }
      }

      // Pricing: leaving row by dual steepest edge.
      int r = -1;
      double best = 0.0;
      int best_var = std::numeric_limits<int>::max();
      for (std::size_t i = 0; i < m_; ++i) {
        const auto j = static_cast<std::size_t>(head_[i]);
        const double inf = infeasibility(j);
        if (inf <= opt_.primal_tol) continue;
        if (bland) {
          if (static_cast<int>(j) < best_var) {
            best_var = static_cast<int>(j);
            r = static_cast<int>(i);
          }
        } else {
          const double score = inf * inf / weights_[i];
          if (score > best) {
            best = score;
            r = static_cast<int>(i);
          }
        }
      }
      if (r < 0) return SolveStatus::kOptimal;

      const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
      const bool to_lower = x_[leaving] < work_lb_[leaving];
      const double target = to_lower ? work_lb_[leaving] : work_ub_[leaving];
      const double delta = x_[leaving] - target;

      rho.setZero();
      rho[r] = 1.0;
      factor_.btran(rho);
      compute_pivot_row(rho, alpha_row);

      // Ratio test (Harris two-pass, or Bland's smallest index).
      const double sign = to_lower ? -1.0 : 1.0;
      double tmax = kInf;
      for (std::size_t j = 0; j < total_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::kBasic || work_lb_[j] == work_ub_[j]) continue;
        const double a = sign * alpha_row[j];
        if (std::fabs(a) <= opt_.pivot_tol) continue;
        double bound;
        if (s == VarStatus::kAtLower) {
          if (a <= 0.0) continue;
          bound = (std::max(d_[j], 0.0) + opt_.dual_tol) / a;
        } else if (s == VarStatus::kAtUpper) {
          if (a >= 0.0) continue;
          bound = (std::min(d_[j], 0.0) - opt_.dual_tol) / a;
        } else {
          bound = opt_.dual_tol / std::fabs(a);
        }
        tmax = std::min(tmax, bound);
      }
      if (tmax == kInf) {
        if (artificial_ && artificial_at_bound() && enlargements < 8) {
          ++enlargements;
          enlarge_artificial_bounds(1e3);
          compute_primal();
          continue;
        }
        return SolveStatus::kInfeasible;
      }
      int q = -1;
      double best_alpha = 0.0;
      double best_ratio = kInf;
      for (std::size_t j = 0; j < total_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::kBasic || work_lb_[j] == work_ub_[j]) continue;
        const double a = sign * alpha_row[j];
        if (std::fabs(a) <= opt_.pivot_tol) continue;
        double ratio;
        if (s == VarStatus::kAtLower) {
          if (a <= 0.0) continue;
          ratio = std::max(d_[j], 0.0) / a;
        } else if (s == VarStatus::kAtUpper) {
          if (a >= 0.0) continue;
          ratio = std::min(d_[j], 0.0) / a;
        } else {
          ratio = 0.0;
        }
        if (bland) {
          if (ratio < best_ratio - 1e-12 ||
              (ratio <= best_ratio + 1e-12 && static_cast<int>(j) < q)) {
            if (ratio < best_ratio - 1e-12 || q < 0 || static_cast<int>(j) < q) {
              best_ratio = std::min(best_ratio, ratio);
              q = static_cast<int>(j);
            }
          }
        } else if (ratio <= tmax && std::fabs(a) > best_alpha) {
          best_alpha = std::fabs(a);
          q = static_cast<int>(j);
        }
      }
      if (q < 0) return SolveStatus::kNumericalFailure;
      const auto entering = static_cast<std::size_t>(q);

      col.setZero();
      add_column(entering, 1.0, col);
      factor_.ftran(col);
      const double pivot = col[r];
      if (std::fabs(pivot) < 1e-11 ||
          std::fabs(pivot - alpha_row[entering]) >
              1e-6 * (1.0 + std::fabs(pivot))) {
        // Inaccurate factorization: rebuild and retry the iteration.
        if (factor_.num_updates() == 0) return SolveStatus::kNumericalFailure;
        if (!refactor()) return SolveStatus::kNumericalFailure;
        if (make_dual_feasible()) compute_primal();
        continue;
      }

      // Dual step.
      const double theta_d = d_[entering] / alpha_row[entering];
      for (std::size_t j = 0; j < total_; ++j) {
        if (status_[j] != VarStatus::kBasic && alpha_row[j] != 0.0) {
          d_[j] -= theta_d * alpha_row[j];
        }
      }
      d_[entering] = 0.0;
      d_[leaving] = -theta_d;

      // Primal step.
      const double theta_p = delta / pivot;
      for (std::size_t i = 0; i < m_; ++i) {
        const double c = col[static_cast<Eigen::Index>(i)];
        if (c != 0.0) x_[static_cast<std::size_t>(head_[i])] -= theta_p * c;
      }
      x_[entering] += theta_p;
      x_[leaving] = target;

      // Dual steepest-edge weights.
      tau = rho;
      factor_.ftran(tau);
      const double w_r = std::max(rho.squaredNorm(), 1e-12);
      for (std::size_t i = 0; i < m_; ++i) {
        if (static_cast<int>(i) == r) continue;
        const double c = col[static_cast<Eigen::Index>(i)];
        if (c == 0.0) continue;
        const double ratio = c / pivot;
        weights_[i] = std::max(
            weights_[i] + ratio * (ratio * w_r - 2.0 * tau[static_cast<Eigen::Index>(i)]),
            1e-12);
      }
      weights_[static_cast<std::size_t>(r)] = std::max(w_r / (pivot * pivot), 1e-12);

      factor_.update(r, col);
      head_[static_cast<std::size_t>(r)] = q;
      pos_[entering] = r;
      pos_[leaving] = -1;
      status_[entering] = VarStatus::kBasic;
      status_[leaving] = to_lower ? VarStatus::kAtLower : VarStatus::kAtUpper;
      if (work_lb_[leaving] == work_ub_[leaving]) status_[leaving] = VarStatus::kAtLower;
      ++iterations_;

      const double obj = current_objective(cost_);
      if (obj > best_obj + 1e-12 * (1.0 + std::fabs(obj))) {
        best_obj = obj;
        stall = 0;
        bland = false;
      } else if (++stall > opt_.stall_limit) {
        bland = true;
      }
    }
  }

  SolveStatus primal_phase() {
    Eigen::VectorXd col(static_cast<Eigen::Index>(m_));
    int stall = 0;
    bool bland = false;
    double best_obj = kInf;
    bool changed_basis = false;
    for (;;) {
      if (out_of_iterations()) return SolveStatus::kLimitReached;
      if (factor_.num_updates() >= opt_.refactor_interval) {
        if (!refactor()) return SolveStatus::kNumericalFailure;
      }
      // Pricing.
      int q = -1;
      double best = 0.0;
      double dir = 0.0;
      for (std::size_t j = 0; j < total_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::kBasic || work_lb_[j] == work_ub_[j]) continue;
        double dj = d_[j];
        double dj_dir = 0.0;
        if (s == VarStatus::kAtLower && dj < -opt_.dual_tol) {
          dj_dir = 1.0;
        } else if (s == VarStatus::kAtUpper && dj > opt_.dual_tol) {
          dj_dir = -1.0;
        } else if ((s == VarStatus::kAtZero || s == VarStatus::kSuperbasic) &&
                   std::fabs(dj) > opt_.dual_tol) {
          dj_dir = dj < 0.0 ? 1.0 : -1.0;
        } else {
          continue;
        }
        if (bland) {
          if (q < 0) {
            q = static_cast<int>(j);
            dir = dj_dir;
          }
        } else if (std::fabs(dj) > best) {
          best = std::fabs(dj);
          q = static_cast<int>(j);
          dir = dj_dir;
        }
      }
      if (q < 0) {
        if (changed_basis) {
          weights_.assign(m_, 1.0);
          weights_exact_ = false;
        }
        return SolveStatus::kOptimal;
      }
      const auto entering = static_cast<std::size_t>(q);
      col.setZero();
      add_column(entering, 1.0, col);
      factor_.ftran(col);

      // x_B(t) = x_B - dir * t * col
      double tmax = kInf;
      for (std::size_t i = 0; i < m_; ++i) {
        const double c = col[static_cast<Eigen::Index>(i)];
        if (std::fabs(c) <= opt_.pivot_tol) continue;
        const auto j = static_cast<std::size_t>(head_[i]);
        const double rate = -dir * c;
        if (rate < 0.0 && std::isfinite(work_lb_[j])) {
          tmax = std::min(tmax, std::max(x_[j] - work_lb_[j] + opt_.primal_tol, 0.0) / -rate);
        } else if (rate > 0.0 && std::isfinite(work_ub_[j])) {
          tmax = std::min(tmax, std::max(work_ub_[j] - x_[j] + opt_.primal_tol, 0.0) / rate);
        }
      }
      double own = kInf;
      if (dir > 0.0 && std::isfinite(work_ub_[entering])) own = work_ub_[entering] - x_[entering];
      if (dir < 0.0 && std::isfinite(work_lb_[entering])) own = x_[entering] - work_lb_[entering];
      own = std::max(own, 0.0);

      int r = -1;
      double best_c = 0.0;
      double step = kInf;
      for (std::size_t i = 0; i < m_; ++i) {
        const double c = col[static_cast<Eigen::Index>(i)];
        if (std::fabs(c) <= opt_.pivot_tol) continue;
        const auto j = static_cast<std::size_t>(head_[i]);
        const double rate = -dir * c;
        double ratio;
        if (rate < 0.0 && std::isfinite(work_lb_[j])) {
          ratio = std::max(x_[j] - work_lb_[j], 0.0) / -rate;
        } else if (rate > 0.0 && std::isfinite(work_ub_[j])) {
          ratio = std::max(work_ub_[j] - x_[j], 0.0) / rate;
        } else {
          continue;
        }
        if (bland) {
          if (ratio < step - 1e-12 || (ratio <= step + 1e-12 && r >= 0 && head_[i] < head_[static_cast<std::size_t>(r)])) {
            step = std::min(step, ratio);
            r = static_cast<int>(i);
          }
        } else if (ratio <= tmax && std::fabs(c) > best_c) {
          best_c = std::fabs(c);
          r = static_cast<int>(i);
          step = ratio;
        }
      }

      if (r < 0 && own == kInf) return SolveStatus::kUnbounded;
      if (r < 0 || own <= step) {
        // Bound flip of the entering variable.
        const double t = own;
        for (std::size_t i = 0; i < m_; ++i) {
          const double c = col[static_cast<Eigen::Index>(i)];
          if (c != 0.0) x_[static_cast<std::size_t>(head_[i])] -= dir * t * c;
        }
        if (dir > 0.0) {
          x_[entering] = work_ub_[entering];
          status_[entering] = VarStatus::kAtUpper;
        } else {
          x_[entering] = work_lb_[entering];
          status_[entering] = VarStatus::kAtLower;
        }
        ++iterations_;
      } else {
        const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
        const double c_r = col[r];
        const bool to_lower = -dir * c_r < 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
          const double c = col[static_cast<Eigen::Index>(i)];
          if (c != 0.0) x_[static_cast<std::size_t>(head_[i])] -= dir * step * c;
        }
        x_[entering] += dir * step;
        x_[leaving] = to_lower ? work_lb_[leaving] : work_ub_[leaving];
        factor_.update(r, col);
        head_[static_cast<std::size_t>(r)] = q;
        pos_[entering] = r;
        pos_[leaving] = -1;
        status_[entering] = VarStatus::kBasic;
        status_[leaving] = to_lower ? VarStatus::kAtLower : VarStatus::kAtUpper;
        if (work_lb_[leaving] == work_ub_[leaving]) status_[leaving] = VarStatus::kAtLower;
        changed_basis = true;
        ++iterations_;
      }
      compute_duals();

      const double obj = current_objective(cost_);
      if (obj < best_obj - 1e-12 * (1.0 + std::fabs(obj))) {
        best_obj = obj;
        stall = 0;
        bland = false;
      } else if (++stall > opt_.stall_limit) {
        bland = true;
      }
    }
  }

  // Recomputes row activities from the structural values and checks them
  // (and the column bounds) in original units.
  bool verify_primal() {
    compute_primal();
    std::vector<double> act(m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        act[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(p)])] +=
            col_val_[static_cast<std::size_t>(p)] * x_[j];
      }
    }
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t j = n_ + r;
      const double viol = std::max(lb_[j] - act[r], act[r] - ub_[j]) / row_scale_[r];
      const double ref = std::max(
          1.0, std::fabs((std::isfinite(lb_[j]) ? lb_[j] : ub_[j]) / row_scale_[r]));
      if (viol > 1e-7 * ref) return false;
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const double viol = std::max(lb_[j] - x_[j], x_[j] - ub_[j]) * col_scale_[j];
      if (viol > 1e-7) {
        // Snap tiny bound violations of nonbasic-like values.
        if (viol > 1e-6) return false;
        x_[j] = std::clamp(x_[j], lb_[j], ub_[j]);
      }
    }
    return true;
  }

  LpOptions opt_;
  std::size_t n_ = 0, m_ = 0, total_ = 0;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<int> row_start_, row_col_;
  std::vector<double> row_val_;
  std::vector<double> row_scale_, col_scale_;
  std::vector<double> lb_, ub_, work_lb_, work_ub_;
  std::vector<double> cost_orig_, cost_;
  std::vector<double> x_, d_, weights_;
  std::vector<VarStatus> status_;
  std::vector<int> head_, pos_;
  BasisFactor factor_;
  bool factor_ok_ = false;
  bool weights_exact_ = false;
  bool artificial_ = false;
  bool cutoff_hit_ = false;
  double objective_ = 0.0;
  std::int64_t iterations_ = 0;
  std::int64_t iteration_cap_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace symtree::lp
