#pragma once

#include <Eigen/Core>
#include <vector>

#include "koopctl/discrete_operator.hpp"
#include "koopctl/grid.hpp"

namespace koopctl {

// Eigenpair of the discretised Sturm-Liouville operator. phi has unit
// trapezoid L2 norm and phi(0) > 0.
struct Eigenpair {
  double lambda = 0.0;
  Eigen::VectorXd phi;
};

// The `count` largest eigenpairs, sorted by decreasing eigenvalue. The
// operator is symmetrised by a diagonal similarity and handed to a
// tridiagonal LAPACK solver; it is the reference the DMD is measured against.
std::vector<Eigenpair> eigensolve_reference(const DiscreteOperator& op, const SpatialGrid& grid,
                                            std::size_t count);

// Same, but only the eigenvalues.
std::vector<double> reference_eigenvalues(const DiscreteOperator& op, std::size_t count);

// Columns phi_1 .. phi_count of the given pairs as an N x count matrix.
Eigen::MatrixXd mode_matrix(const std::vector<Eigenpair>& pairs, std::size_t first,
                            std::size_t count);

}  // namespace koopctl
