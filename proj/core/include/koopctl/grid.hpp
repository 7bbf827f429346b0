#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstddef>

namespace koopctl {

// Uniform grid on [0, 1] with N >= 3 nodes.
class SpatialGrid {
 public:
  explicit SpatialGrid(std::size_t nodes);

  std::size_t size() const { return static_cast<std::size_t>(z_.size()); }
  double spacing() const { return h_; }
  const Eigen::VectorXd& nodes() const { return z_; }
  double node(std::size_t i) const { return z_[static_cast<Eigen::Index>(i)]; }

  // Composite trapezoid weights, h * (1/2, 1, ..., 1, 1/2).
  const Eigen::VectorXd& weights() const { return w_; }

  // <x, y> = sum_k w_k x_k conj(y_k).
  double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  std::complex<double> inner(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) const;
  double norm(const Eigen::VectorXd& x) const;
  double norm(const Eigen::VectorXcd& x) const;

 private:
  Eigen::VectorXd z_;
  Eigen::VectorXd w_;
  double h_;
};

// Sampled state x(z_k, t) at one time instant.
struct StateProfile {
  Eigen::VectorXd values;
  double t = 0.0;
};

}  // namespace koopctl
