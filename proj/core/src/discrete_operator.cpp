#include "koopctl/discrete_operator.hpp"

namespace koopctl {

DiscreteOperator assemble_operator(const ParabolicPlant& plant, const SpatialGrid& grid) {
  plant.validate();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double h = grid.spacing();
  const double r = plant.rho / (h * h);

  DiscreteOperator op;
  op.diag = plant.a.sample(grid.nodes()).array() - 2.0 * r;
  op.lower = Eigen::VectorXd::Constant(n - 1, r);
  op.upper = Eigen::VectorXd::Constant(n - 1, r);

  // Ghost nodes from central differences of the Robin conditions:
  //   x_{-1} = x_1 - 2h (q0 x_0 + u1),  x_N = x_{N-2} + 2h (q1 x_{N-1} + u2).
  op.upper[0] = 2.0 * r;
  op.diag[0] -= 2.0 * plant.rho * plant.q0 / h;
  op.lower[n - 2] = 2.0 * r;
  op.diag[n - 1] += 2.0 * plant.rho * plant.q1 / h;

  op.g1 = Eigen::VectorXd::Zero(n);
  op.g2 = Eigen::VectorXd::Zero(n);
  op.g1[0] = -2.0 * plant.rho / h;
  op.g2[n - 1] = 2.0 * plant.rho / h;
  return op;
}

Eigen::MatrixXd DiscreteOperator::dense() const {
  const Eigen::Index n = diag.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.diagonal() = diag;
  a.diagonal(1) = upper;
  a.diagonal(-1) = lower;
  return a;
}

Eigen::VectorXd DiscreteOperator::apply(const Eigen::VectorXd& x) const {
  const Eigen::Index n = diag.size();
  Eigen::VectorXd y = diag.cwiseProduct(x);
  y.head(n - 1) += upper.cwiseProduct(x.tail(n - 1));
  y.tail(n - 1) += lower.cwiseProduct(x.head(n - 1));
  return y;
}

Eigen::MatrixXd DiscreteOperator::input_matrix() const {
  Eigen::MatrixXd g(diag.size(), 2);
  g.col(0) = g1;
  g.col(1) = g2;
  return g;
}

}  // namespace koopctl
