#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "koopctl/discrete_operator.hpp"
#include "koopctl/grid.hpp"
#include "koopctl/plant.hpp"

namespace koopctl {

using Signal = std::function<double(double)>;

inline Signal zero_signal() {
  return [](double) { return 0.0; };
}

// Recorded states x(t_k) on a fixed grid with uniform record spacing.
struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> u1;
  std::vector<double> u2;

  std::size_t size() const { return t.size(); }
  // Spacing between consecutive records (0 for a single record).
  double record_step() const;
  StateProfile at(std::size_t k) const { return {states.at(k), t.at(k)}; }
  StateProfile back() const { return at(size() - 1); }

  // Throws InvalidArgument on non-increasing or non-uniform time stamps.
  void validate() const;
};

struct SimulationOptions {
  double t_final = 0.0;  // absolute end time; the start is x0.t
  double dt = 1e-4;
  // Store every `record_every`-th internal step (1 = every step).
  std::size_t record_every = 1;
};

// Crank-Nicolson integration of x' = A x + g1 u1 + g2 u2, inputs evaluated at
// the midpoint of each step.
Trajectory simulate(const ParabolicPlant& plant, const SpatialGrid& grid, const StateProfile& x0,
                    const Signal& u1, const Signal& u2, const SimulationOptions& options);

// State feedback u = -K <x, modes>. gain is 2 x n, modes is N x n (one
// column per mode sampled on the grid). The rank-2 feedback coupling is
// kept implicit inside the Crank-Nicolson matrix.
Trajectory closed_loop_simulate(const ParabolicPlant& plant, const SpatialGrid& grid,
                                const StateProfile& x0, const Eigen::MatrixXd& gain,
                                const Eigen::MatrixXd& modes, const SimulationOptions& options);

// Number of internal steps covering [t0, t_final] at step dt; rejects
// spans that are not an integer multiple of dt (relative tolerance 1e-9).
std::size_t step_count(double t0, double t_final, double dt);

}  // namespace koopctl
