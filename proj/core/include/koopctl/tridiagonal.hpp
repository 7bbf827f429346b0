#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include "koopctl/error.hpp"

namespace koopctl {

// LU factorisation of a tridiagonal matrix without pivoting (Thomas
// algorithm). Adequate for the diagonally dominant Crank-Nicolson matrices
// and shifted operators used here; a vanishing pivot raises NumericalError.
template <typename Scalar>
class TridiagonalSolver {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TridiagonalSolver() = default;

  // lower[i] = T(i+1, i), diag[i] = T(i, i), upper[i] = T(i, i+1).
  TridiagonalSolver(const Vector& lower, const Vector& diag, const Vector& upper) {
    const Eigen::Index n = diag.size();
    if (lower.size() != n - 1 || upper.size() != n - 1) {
      throw InvalidArgument("tridiagonal: band sizes do not match");
    }
    lower_ = lower;
    upper_ = upper;
    pivot_.resize(n);
    pivot_[0] = diag[0];
    check_pivot(0);
    for (Eigen::Index i = 1; i < n; ++i) {
      lower_[i - 1] = lower[i - 1] / pivot_[i - 1];
      pivot_[i] = diag[i] - lower_[i - 1] * upper[i - 1];
      check_pivot(i);
    }
  }

  Eigen::Index size() const { return pivot_.size(); }

  template <typename Rhs>
  Vector solve(const Rhs& b) const {
    const Eigen::Index n = size();
    Vector x(n);
    x[0] = b[0];
    for (Eigen::Index i = 1; i < n; ++i) x[i] = b[i] - lower_[i - 1] * x[i - 1];
    x[n - 1] /= pivot_[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) {
      x[i] = (x[i] - upper_[i] * x[i + 1]) / pivot_[i];
    }
    return x;
  }

 private:
  void check_pivot(Eigen::Index i) const {
    if (std::abs(pivot_[i]) < 1e-300) {
      throw NumericalError("tridiagonal: zero pivot at row " + std::to_string(i));
    }
  }

  Vector lower_;
  Vector upper_;
  Vector pivot_;
};

// Solver for T + U V^* (conjugate transpose) with T tridiagonal and U, V of low column rank
// (Sherman-Morrison-Woodbury).
template <typename Scalar>
class LowRankUpdatedSolver {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  LowRankUpdatedSolver(TridiagonalSolver<Scalar> base, const Matrix& u, const Matrix& v)
      : base_(std::move(base)), v_(v) {
    if (u.cols() != v.cols() || u.rows() != base_.size() || v.rows() != base_.size()) {
      throw InvalidArgument("low-rank update: dimension mismatch");
    }
    tinv_u_.resize(u.rows(), u.cols());
    for (Eigen::Index j = 0; j < u.cols(); ++j) tinv_u_.col(j) = base_.solve(u.col(j));
    Matrix cap = Matrix::Identity(u.cols(), u.cols()) + v_.adjoint() * tinv_u_;
    capacitance_ = Eigen::PartialPivLU<Matrix>(cap);
    if (u.cols() > 0 && std::abs(capacitance_.determinant()) < 1e-300) {
      throw NumericalError("low-rank update: singular capacitance matrix");
    }
  }

  template <typename Rhs>
  Vector solve(const Rhs& b) const {
    Vector y = base_.solve(b);
    if (v_.cols() == 0) return y;
    Vector coupling = v_.adjoint() * y;
    return y - tinv_u_ * capacitance_.solve(coupling);
  }

 private:
  TridiagonalSolver<Scalar> base_;
  Matrix v_;
  Matrix tinv_u_;
  Eigen::PartialPivLU<Matrix> capacitance_;
};

}  // namespace koopctl
