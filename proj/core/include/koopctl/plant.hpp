#pragma once

#include <Eigen/Core>
#include <vector>

namespace koopctl {

// Reaction coefficient a(z) on [0, 1], either a polynomial (ascending
// powers of z) or a sample table interpolated by a cubic spline.
class ReactionProfile {
 public:
  ReactionProfile() : coefficients_{0.0} {}

  static ReactionProfile constant(double value) { return polynomial({value}); }
  static ReactionProfile polynomial(std::vector<double> coefficients);
  static ReactionProfile table(std::vector<double> z, std::vector<double> values);

  double operator()(double z) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& z) const;

  bool is_polynomial() const { return table_z_.empty(); }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& table_z() const { return table_z_; }
  const std::vector<double>& table_values() const { return table_values_; }

 private:
  std::vector<double> coefficients_;
  std::vector<double> table_z_;
  std::vector<double> table_values_;
};

// x_t = rho x'' + a(z) x on (0,1), x'(0) = q0 x(0) + u1, x'(1) = q1 x(1) + u2.
struct ParabolicPlant {
  double rho = 1.0;
  ReactionProfile a;
  double q0 = 0.0;
  double q1 = 0.0;

  // Throws InvalidArgument unless rho > 0 and every coefficient is finite.
  void validate() const;

  // a(z) = 7 - 8 (z - 1/2)^2, q0 = 2, q1 = 1.
  static ParabolicPlant diffusion_reaction_example(double rho = 1.0);
};

}  // namespace koopctl
