#include "koopctl/plant.hpp"

#include <cmath>
#include <utility>

#include "koopctl/error.hpp"
#include "koopctl/interpolation.hpp"

namespace koopctl {

ReactionProfile ReactionProfile::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) throw InvalidArgument("reaction polynomial has no coefficients");
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw InvalidArgument("reaction polynomial coefficient is not finite");
  }
  ReactionProfile p;
  p.coefficients_ = std::move(coefficients);
  p.table_z_.clear();
  p.table_values_.clear();
  return p;
}

ReactionProfile ReactionProfile::table(std::vector<double> z, std::vector<double> values) {
  if (z.size() != values.size() || z.size() < 2) {
    throw InvalidArgument("reaction table needs at least two (z, a) pairs of equal length");
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i]) || !std::isfinite(values[i])) {
      throw InvalidArgument("reaction table entry is not finite");
    }
    if (i > 0 && z[i] <= z[i - 1]) throw InvalidArgument("reaction table z must increase");
  }
  if (z.front() > 0.0 || z.back() < 1.0) {
    throw InvalidArgument("reaction table must cover [0, 1]");
  }
  ReactionProfile p;
  p.coefficients_.clear();
  p.table_z_ = std::move(z);
  p.table_values_ = std::move(values);
  return p;
}

double ReactionProfile::operator()(double z) const {
  if (is_polynomial()) {
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }
  return CubicSpline(table_z_, table_values_)(z);
}

Eigen::VectorXd ReactionProfile::sample(const Eigen::VectorXd& z) const {
  if (is_polynomial()) return z.unaryExpr([this](double s) { return (*this)(s); });
  return CubicSpline(table_z_, table_values_)(z);
}

void ParabolicPlant::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("plant: rho must be positive");
  if (!std::isfinite(q0) || !std::isfinite(q1)) {
    throw InvalidArgument("plant: Robin coefficients must be finite");
  }
}

ParabolicPlant ParabolicPlant::diffusion_reaction_example(double rho) {
  // 7 - 8 (z - 1/2)^2 = 5 + 8 z - 8 z^2
  return ParabolicPlant{rho, ReactionProfile::polynomial({5.0, 8.0, -8.0}), 2.0, 1.0};
}

}  // namespace koopctl
