#pragma once

#include <Eigen/Core>
#include <vector>

namespace koopctl {

// Not-a-knot cubic spline through (x_k, y_k), x strictly increasing.
// Outside [x_0, x_last] the end pieces are continued, which is how mode
// values at the boundary are extrapolated from interior sensors.
// With fewer than four knots the interpolating polynomial is used.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& t) const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

// Interpolates complex samples component-wise onto the points t.
Eigen::VectorXcd spline_interpolate(const std::vector<double>& x,
                                    const Eigen::VectorXcd& y,
                                    const Eigen::VectorXd& t);

}  // namespace koopctl
