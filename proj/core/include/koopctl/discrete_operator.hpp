#pragma once

#include <Eigen/Core>

#include "koopctl/grid.hpp"
#include "koopctl/plant.hpp"

namespace koopctl {

// Finite-difference discretisation x' = A x + g1 u1 + g2 u2 of the plant.
// A is tridiagonal; the Robin conditions are folded into the first and
// last rows by ghost-node elimination.
struct DiscreteOperator {
  Eigen::VectorXd lower;  // A(i+1, i)
  Eigen::VectorXd diag;   // A(i, i)
  Eigen::VectorXd upper;  // A(i, i+1)
  Eigen::VectorXd g1;     // -2 rho / h at node 0, zero elsewhere
  Eigen::VectorXd g2;     // +2 rho / h at node N-1, zero elsewhere

  std::size_t size() const { return static_cast<std::size_t>(diag.size()); }
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  // [g1 g2] as an N x 2 matrix.
  Eigen::MatrixXd input_matrix() const;
};

DiscreteOperator assemble_operator(const ParabolicPlant& plant, const SpatialGrid& grid);

}  // namespace koopctl
