#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace symtree::lp {

/// Sparse LU of the basis matrix plus a product-form eta file for the
/// updates since the last refactorization.
class BasisFactor {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  bool factorize(const SparseMatrix& basis) {
    etas_.clear();
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    valid_ = lu_.info() == Eigen::Success;
    return valid_;
  }

  bool valid() const { return valid_; }
  int num_updates() const { return static_cast<int>(etas_.size()); }

  /// v <- B^{-1} v
  void ftran(Eigen::VectorXd& v) const {
    v = lu_.solve(v);
    for (const auto& eta : etas_) {
      const double vr = v[eta.row] / eta.pivot;
      if (vr != 0.0) {
        for (std::size_t k = 0; k < eta.index.size(); ++k) {
          v[eta.index[k]] -= eta.value[k] * vr;
        }
      }
      v[eta.row] = vr;
    }
  }

  /// u <- B^{-T} u
  void btran(Eigen::VectorXd& u) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double acc = u[it->row];
      for (std::size_t k = 0; k < it->index.size(); ++k) {
        acc -= it->value[k] * u[it->index[k]];
      }
      u[it->row] = acc / it->pivot;
    }
    u = lu_.transpose().solve(u);
  }

  /// Records the replacement of basis column `row` by a column whose FTRAN
  /// image is `alpha`.
  void update(int row, const Eigen::VectorXd& alpha) {
    Eta eta;
    eta.row = row;
    eta.pivot = alpha[row];
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      if (i != row && alpha[i] != 0.0) {
        eta.index.push_back(static_cast<int>(i));
        eta.value.push_back(alpha[i]);
      }
    }
    etas_.push_back(std::move(eta));
  }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<int> index;
    std::vector<double> value;
  };

  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  bool valid_ = false;
};

}  // namespace symtree::lp
