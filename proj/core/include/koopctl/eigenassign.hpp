#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "koopctl/eigensolve.hpp"
#include "koopctl/grid.hpp"
#include "koopctl/krylov_dmd.hpp"

namespace koopctl {

// Finite modal model d/dt phi_n[x] = (Lambda_n - B_n K) phi_n[x].
struct ModalModel {
  Eigen::VectorXcd lambda;  // decreasing real part
  Eigen::MatrixXcd B;       // n x 2, rows b_i^T = rho (-phi_i(0), phi_i(1))
  Eigen::MatrixXcd modes;   // N x n, unit-L2 modes on the grid
  double rho_hat = 1.0;
  // Estimated eigenvalues beyond the first n (may be empty).
  Eigen::VectorXcd tail;

  std::size_t order() const { return static_cast<std::size_t>(lambda.size()); }
  Eigen::MatrixXcd Lambda() const { return lambda.asDiagonal(); }
  // Real parts of the modes; throws if any imaginary part exceeds tol.
  Eigen::MatrixXd real_modes(double tol = 1e-8) const;
};

// Input rows from the boundary values of the first n identified modes. The
// spectrum entries beyond n populate `tail`.
ModalModel build_modal_model(const KoopmanSpectrum& spectrum, std::size_t n, double rho_hat);

// Same construction from reference eigenpairs (verification mode).
ModalModel modal_model_from_reference(const std::vector<Eigenpair>& pairs, std::size_t n,
                                      double rho);

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct AssignabilityReport {
  std::vector<CheckResult> checks;
  bool ok() const;
  std::string summary() const;
};

AssignabilityReport assignability_check(const ModalModel& model, const Eigen::VectorXcd& targets);

struct GainSynthesis {
  Eigen::VectorXcd targets;
  Eigen::MatrixXcd P;        // 2 x n parameter vectors
  Eigen::MatrixXcd V_tilde;  // n x n, columns (Lambda_n - target_i I)^{-1} B_n p_i
  Eigen::MatrixXd K;         // 2 x n real gain
  Eigen::VectorXcd achieved; // spectrum of Lambda_n - B_n K
  double cond_V = 0.0;

  double gain_norm() const;  // spectral norm of K
};

// K = P V~^{-1}; verifies the assigned spectrum to 1e-8 relative.
GainSynthesis parametric_gain(const ModalModel& model, const Eigen::VectorXcd& targets,
                              const Eigen::MatrixXcd& P);

// Spectrum of an n x n matrix, sorted with spectral_order.
Eigen::VectorXcd sorted_eigenvalues(const Eigen::MatrixXcd& m);

// Largest pairwise distance after matching each target to a distinct
// eigenvalue (greedy, in target order), relative to max(1, |target|).
double spectrum_mismatch(const Eigen::VectorXcd& targets, const Eigen::VectorXcd& eigenvalues);

struct ClosedLoopEigenstructure {
  // Row i holds conj(c_i)^T: the coefficients of psi~_i in phi_1..phi_n.
  Eigen::MatrixXcd coefficients;  // (n + N_tail) x n
  Eigen::MatrixXcd psi;           // N x (n + N_tail)
  Eigen::VectorXd partial_sums;   // S_m = sum_{i<=m} ||psi~_i - phi_i||^2
  std::string tail_source;
};

// The tail pairs are phi_{n+1}, phi_{n+2}, ... with their eigenvalues.
ClosedLoopEigenstructure closed_loop_eigenstructure(const GainSynthesis& synth,
                                                    const ModalModel& model,
                                                    const std::vector<Eigenpair>& tail,
                                                    const SpatialGrid& grid,
                                                    std::string tail_source = "reference");

struct OptimizerOptions {
  double box = 1.0;
  std::size_t starts = 50;
  std::uint64_t seed = 1;
  std::size_t max_iterations = 4000;
};

struct ParameterSearch {
  Eigen::MatrixXcd P;
  double gain_norm = 0.0;
  std::size_t feasible_starts = 0;
  std::size_t best_start = 0;
};

// Multi-start Nelder-Mead over P in [-box, box] minimising ||P V~(P)^{-1}||_2.
// Real targets get real p_i; a conjugate target pair shares one complex p.
ParameterSearch optimize_parameters(const ModalModel& model, const Eigen::VectorXcd& targets,
                                    const OptimizerOptions& options);

}  // namespace koopctl
