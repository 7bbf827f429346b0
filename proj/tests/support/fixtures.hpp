#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "koopctl/discrete_operator.hpp"
#include "koopctl/eigenassign.hpp"
#include "koopctl/eigensolve.hpp"
#include "koopctl/krylov_dmd.hpp"
#include "koopctl/observables.hpp"
#include "koopctl/plant.hpp"
#include "koopctl/simulate.hpp"

namespace koopctl::fixture {

inline constexpr double kTs = 0.004;
inline constexpr std::size_t kSubsteps = 100;

// Left-boundary pulse of `amplitude` on [-duration, 0) from rest; returns x(0).
StateProfile pulse_state(const ParabolicPlant& plant, const SpatialGrid& grid,
                         double amplitude = 10.0, double duration = 0.1);

// Step u2 = u0 from rest, recorded every t_s, with records before `settle`
// dropped.
Trajectory step_response(const ParabolicPlant& plant, const SpatialGrid& grid, double u0,
                         double settle, std::size_t periods);

// Snapshots y_k = sum_i c_i mu_i^k phi_i(sensors), the exact modal
// superposition used for the exact-recovery checks.
DataMatrix modal_data(const std::vector<Eigenpair>& pairs, const std::vector<double>& coeffs,
                      const SpatialGrid& grid, const SamplingConfig& config, std::size_t n);

// The diffusion-reaction example, identified and synthesized once per process.
struct ExampleRun {
  ParabolicPlant plant;
  SpatialGrid grid{2001};
  std::vector<Eigenpair> reference;  // 70 largest
  StateProfile x0;
  Trajectory traj;                   // 13 sampling periods, recorded every t_s
  SamplingConfig sampling;
  DataMatrix data;                   // M = 500, n = 11
  KoopmanSpectrum spectrum;
  ModalModel model;                  // n = 3, rho_hat = 1
  Eigen::VectorXcd targets;
  ParameterSearch search;
  GainSynthesis synth;
};

const ExampleRun& example_run();

// Hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Eigen::VectorXd vector(Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c, double lo, double hi) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) m.col(j) = vector(r, lo, hi);
    return m;
  }

  // n distinct real negative targets, optionally with one conjugate pair,
  // kept at least `gap` apart and away from `avoid`.
  Eigen::VectorXcd hurwitz_targets(std::size_t n, const Eigen::VectorXcd& avoid, double gap = 0.5);

  // Random Hurwitz matrix in real Schur form Q T Q^T: orthogonal Q, T upper
  // triangular with diagonal in [-5, -0.2] and off-diagonal in [-1, 1].
  Eigen::MatrixXd hurwitz_matrix(Eigen::Index n);

  // Parameter matrix matching the conjugate structure of `targets`.
  Eigen::MatrixXcd parameters(const Eigen::VectorXcd& targets, double box = 1.0);

 private:
  std::mt19937_64 rng_;
};

}  // namespace koopctl::fixture
