#include "koopctl/simulate.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <algorithm>

#include "koopctl/error.hpp"
#include "koopctl/tridiagonal.hpp"

namespace koopctl {

double Trajectory::record_step() const {
  return t.size() < 2 ? 0.0 : (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

void Trajectory::validate() const {
  if (t.empty()) throw InvalidArgument("trajectory is empty");
  if (states.size() != t.size() || u1.size() != t.size() || u2.size() != t.size()) {
    throw InvalidArgument("trajectory columns have different lengths");
  }
  const double step = record_step();
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double d = t[k] - t[k - 1];
    if (!(d > 0.0)) throw InvalidArgument("trajectory time stamps must increase strictly");
    if (std::abs(d - step) > 1e-9 * std::max(1.0, std::abs(step))) {
      throw InvalidArgument("trajectory records are not uniformly spaced at index " +
                            std::to_string(k));
    }
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != states[0].size()) {
      throw InvalidArgument("trajectory state sizes differ at record " + std::to_string(k));
    }
  }
}

std::size_t step_count(double t0, double t_final, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("simulate: dt must be positive");
  const double span = t_final - t0;
  if (!(span >= dt * (1.0 - 1e-9))) throw InvalidArgument("simulate: t_final must be >= t0 + dt");
  const double steps = span / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw InvalidArgument("simulate: (t_final - t0) is not a multiple of dt");
  }
  return static_cast<std::size_t>(rounded);
}

namespace {

// Crank-Nicolson driver shared by the open- and closed-loop integrators.
// `advance` maps x_k to x_{k+1} given the midpoint time and returns the
// inputs applied during the step.
template <typename Step, typename Inputs>
Trajectory integrate(const StateProfile& x0, const SimulationOptions& options,
                     const Step& advance, const Inputs& inputs_at) {
  const std::size_t steps = step_count(x0.t, options.t_final, options.dt);
  const std::size_t every = options.record_every == 0 ? 1 : options.record_every;
  if (steps % every != 0) {
    throw InvalidArgument("simulate: step count " + std::to_string(steps) +
                          " is not a multiple of record_every");
  }
  Trajectory traj;
  const std::size_t records = steps / every + 1;
  traj.t.reserve(records);
  traj.states.reserve(records);
  auto record = [&](std::size_t k, const Eigen::VectorXd& x) {
    const double t = x0.t + static_cast<double>(k) * options.dt;
    const auto [a, b] = inputs_at(t, x);
    traj.t.push_back(t);
    traj.states.push_back(x);
    traj.u1.push_back(a);
    traj.u2.push_back(b);
  };
  Eigen::VectorXd x = x0.values;
  record(0, x);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t_mid = x0.t + (static_cast<double>(k) + 0.5) * options.dt;
    x = advance(x, t_mid);
    if (!x.allFinite()) {
      throw NumericalError("simulate: non-finite state after step " + std::to_string(k + 1));
    }
    if ((k + 1) % every == 0) record(k + 1, x);
  }
  return traj;
}

TridiagonalSolver<double> crank_nicolson_matrix(const DiscreteOperator& op, double dt) {
  const double c = 0.5 * dt;
  const Eigen::VectorXd diag = (1.0 - c * op.diag.array()).matrix();
  return TridiagonalSolver<double>(-c * op.lower, diag, -c * op.upper);
}

void check_initial_state(const SpatialGrid& grid, const StateProfile& x0) {
  if (static_cast<std::size_t>(x0.values.size()) != grid.size()) {
    throw InvalidArgument("simulate: initial state does not match the grid");
  }
  if (!x0.values.allFinite()) throw InvalidArgument("simulate: initial state is not finite");
}

}  // namespace

Trajectory simulate(const ParabolicPlant& plant, const SpatialGrid& grid, const StateProfile& x0,
                    const Signal& u1, const Signal& u2, const SimulationOptions& options) {
  check_initial_state(grid, x0);
  const DiscreteOperator op = assemble_operator(plant, grid);
  const TridiagonalSolver<double> lhs = crank_nicolson_matrix(op, options.dt);
  const double c = 0.5 * options.dt;
  const double dt = options.dt;
  auto advance = [&](const Eigen::VectorXd& x, double t_mid) {
    Eigen::VectorXd rhs = x + c * op.apply(x);
    const double a = u1(t_mid);
    const double b = u2(t_mid);
    rhs[0] += dt * op.g1[0] * a;
    rhs[rhs.size() - 1] += dt * op.g2[rhs.size() - 1] * b;
    return lhs.solve(rhs);
  };
  auto inputs = [&](double t, const Eigen::VectorXd&) { return std::pair{u1(t), u2(t)}; };
  return integrate(x0, options, advance, inputs);
}

Trajectory closed_loop_simulate(const ParabolicPlant& plant, const SpatialGrid& grid,
                                const StateProfile& x0, const Eigen::MatrixXd& gain,
                                const Eigen::MatrixXd& modes, const SimulationOptions& options) {
  check_initial_state(grid, x0);
  if (gain.rows() != 2 || gain.cols() != modes.cols()) {
    throw InvalidArgument("closed_loop_simulate: gain must be 2 x n with n = number of modes");
  }
  if (static_cast<std::size_t>(modes.rows()) != grid.size()) {
    throw InvalidArgument("closed_loop_simulate: modes are not sampled on the grid");
  }
  const DiscreteOperator op = assemble_operator(plant, grid);
  const double dt = options.dt;
  const double c = 0.5 * dt;

  // u = -F x with F = K (W modes)^T, a 2 x N row map.
  const Eigen::MatrixXd functionals = (grid.weights().asDiagonal() * modes).transpose();
  const Eigen::MatrixXd feedback = gain * functionals;
  const Eigen::MatrixXd g = op.input_matrix();

  // (I - c A + c G F) x_{k+1} = (I + c A - c G F) x_k; G F has rank <= 2.
  const LowRankUpdatedSolver<double> lhs(crank_nicolson_matrix(op, dt), c * g,
                                         feedback.transpose());
  auto advance = [&](const Eigen::VectorXd& x, double) {
    const Eigen::Vector2d u = -feedback * x;
    Eigen::VectorXd rhs = x + c * op.apply(x) + c * (g * u);
    return lhs.solve(rhs);
  };
  auto inputs = [&](double, const Eigen::VectorXd& x) {
    const Eigen::Vector2d u = -feedback * x;
    return std::pair{u[0], u[1]};
  };
  return integrate(x0, options, advance, inputs);
}

}  // namespace koopctl
