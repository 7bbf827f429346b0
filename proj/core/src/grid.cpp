#include "koopctl/grid.hpp"

#include <cmath>
#include <string>

#include "koopctl/error.hpp"

namespace koopctl {

SpatialGrid::SpatialGrid(std::size_t nodes) {
  if (nodes < 3) {
    throw InvalidArgument("grid needs at least 3 nodes, got " + std::to_string(nodes));
  }
  const auto n = static_cast<Eigen::Index>(nodes);
  h_ = 1.0 / static_cast<double>(nodes - 1);
  z_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) z_[i] = static_cast<double>(i) * h_;
  z_[n - 1] = 1.0;
  w_ = Eigen::VectorXd::Constant(n, h_);
  w_[0] = w_[n - 1] = 0.5 * h_;
}

double SpatialGrid::inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return (w_.array() * x.array() * y.array()).sum();
}

std::complex<double> SpatialGrid::inner(const Eigen::VectorXcd& x,
                                        const Eigen::VectorXcd& y) const {
  return (w_.cast<std::complex<double>>().array() * x.array() * y.conjugate().array()).sum();
}

double SpatialGrid::norm(const Eigen::VectorXd& x) const { return std::sqrt(inner(x, x)); }

double SpatialGrid::norm(const Eigen::VectorXcd& x) const {
  return std::sqrt((w_.array() * x.array().abs2()).sum());
}

}  // namespace koopctl
