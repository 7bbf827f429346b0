#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "koopctl/eigenassign.hpp"
#include "koopctl/eigensolve.hpp"
#include "koopctl/plant.hpp"
#include "koopctl/simulate.hpp"

namespace koopctl {

// Solves A^T Pi + Pi A = -I for Hurwitz A by Kronecker vectorisation.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& a);

struct ErrorBounds {
  double eps_lambda = 0.0;
  double eps_B = 0.0;
  double c_phi = 0.0;
  // Reference input matrix, when the bounds came from a reference oracle.
  Eigen::MatrixXcd B_reference;
  std::string scope = "span-restricted";
};

// Compares the identified model against reference eigenpairs, pairing modes by
// nearest eigenvalue (must be a bijection).
ErrorBounds error_bounds(const ModalModel& identified, const std::vector<Eigenpair>& reference,
                         double rho_true, const SpatialGrid& grid);

struct RobustnessCertificate {
  Eigen::MatrixXd Pi;
  double lambda_max_Pi = 0.0;
  double lambda_min_Pi = 0.0;
  ErrorBounds bounds;
  double gain_norm = 0.0;
  double coupling_norm = 0.0;  // ||Pi B_n K||
  double gamma = 0.0;
  double alpha_hat = 0.0;
  double lambda_tail_max = 0.0;
  bool pass = false;
  Eigen::MatrixXd A_cl;
};

// gamma = 2((eps_lambda + eps_B ||K||) lambda_max(Pi) + c_phi ||Pi B_n K||) - 1,
// alpha_hat = gamma / (2 lambda_max(Pi)); pass iff gamma < 0 and
// lambda_tail_max < alpha_hat < 0. Without a reference B_n the coupling term
// uses the bound ||Pi B^_n K|| + eps_B lambda_max(Pi) ||K||.
RobustnessCertificate certify(const GainSynthesis& synth, const ModalModel& model,
                              const ErrorBounds& bounds, double lambda_tail_max);

struct DecayFit {
  double alpha = 0.0;
  double M = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
};

// Least-squares fit of log ||x(t)|| on [t_start, t_final]; records whose norm
// has fallen below 1e-14 end the window.
DecayFit decay_fit(const Trajectory& traj, const SpatialGrid& grid, double t_start);

struct TargetMatch {
  Complex target;
  Complex closed_loop;
  double error = 0.0;
  double open_loop = 0.0;  // open-loop eigenvalue with the same index
};

struct TailShift {
  std::size_t index = 0;  // 1-based eigenvalue index
  double open_loop = 0.0;
  Complex closed_loop;
  double displacement = 0.0;
  double relative = 0.0;
};

struct SpectrumReport {
  std::vector<TargetMatch> targets;
  std::vector<TailShift> tail;
  double max_target_error = 0.0;
  double max_tail_relative = 0.0;
};

// Full spectrum of the discretised closed-loop operator
// A - [g1 g2] K <., modes>.
Eigen::VectorXcd closed_loop_operator_spectrum(const ParabolicPlant& plant,
                                               const SpatialGrid& grid,
                                               const Eigen::MatrixXd& gain,
                                               const Eigen::MatrixXd& modes);

SpectrumReport verify_closed_loop_spectrum(const ParabolicPlant& plant, const SpatialGrid& grid,
                                           const GainSynthesis& synth,
                                           const Eigen::MatrixXd& modes, std::size_t n_check);

// Eigenvector of the adjoint closed-loop operator for the eigenvalue nearest
// `shift`, by inverse iteration. Unit L2, value at z = 0 real positive.
Eigen::VectorXcd closed_loop_adjoint_eigenvector(const ParabolicPlant& plant,
                                                 const SpatialGrid& grid,
                                                 const Eigen::MatrixXd& gain,
                                                 const Eigen::MatrixXd& modes, Complex shift);

// L2 distance between two functions after scaling both to unit norm and
// aligning the phase of the second to the first.
double aligned_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                        const SpatialGrid& grid);

}  // namespace koopctl
