#pragma once

#include <Eigen/Core>
#include <complex>
#include <string>
#include <vector>

#include "koopctl/grid.hpp"
#include "koopctl/observables.hpp"
#include "koopctl/simulate.hpp"

namespace koopctl {

using Complex = std::complex<double>;

// One-step recursion y_n = -sum_k f_k y_k + r_n fitted on the snapshots.
struct CompanionModel {
  Eigen::VectorXd f;         // f_0 .. f_{n-1}
  Eigen::VectorXd residual;  // r_n = D_n f + y_n
  double t_s = 0.0;
  std::size_t effective_rank = 0;

  std::size_t order() const { return static_cast<std::size_t>(f.size()); }
  bool rank_deficient() const { return effective_rank < order(); }
  Eigen::MatrixXd companion_matrix() const;
};

// Relative singular-value cutoff of the least-squares fit.
inline constexpr double kPseudoinverseCutoff = 1e-12;

CompanionModel fit_companion(const DataMatrix& data);

struct CompanionEigenvector {
  Complex mu;
  Eigen::VectorXcd v;
};

// Roots of s^n + f_{n-1} s^{n-1} + ... + f_0 with eigenvectors taken from the
// inverse Vandermonde matrix. Throws NumericalError when two roots are closer
// than 1e-10 max|mu|.
std::vector<CompanionEigenvector> companion_eigen(const CompanionModel& model);

struct KoopmanEigenpair {
  Complex mu;
  Complex lambda_hat;            // log(mu) / t_s, principal branch
  Eigen::VectorXcd samples;      // D_n v_i (all M*d channels)
  Eigen::VectorXcd mode;         // interpolated onto the grid, unit L2, mode(0) > 0
  Complex amplitude;             // scale removed by the normalisation
  double rel_residual = 0.0;
};

struct KoopmanSpectrum {
  std::vector<KoopmanEigenpair> modes;  // decreasing Re lambda_hat
  CompanionModel model;
  std::vector<double> sensors;          // positions of the first M channels
  std::vector<std::string> warnings;

  std::size_t size() const { return modes.size(); }
  Eigen::VectorXcd eigenvalues() const;
};

// Ordering used for every spectrum: decreasing real part, then decreasing
// imaginary part.
bool spectral_order(Complex a, Complex b);

// Interpolates spatial samples taken at `sensors` onto the grid and fixes the
// scale (unit L2) and phase (value at z = 0 real positive). Returns the
// removed scale through `amplitude` when non-null.
Eigen::VectorXcd normalize_mode(const std::vector<double>& sensors, const Eigen::VectorXcd& samples,
                                const SpatialGrid& grid, Complex* amplitude = nullptr);

KoopmanSpectrum extract_spectrum(const DataMatrix& data, const CompanionModel& model,
                                 const SpatialGrid& grid);

// fit_companion + extract_spectrum.
KoopmanSpectrum krylov_dmd(const DataMatrix& data, const SpatialGrid& grid);

struct OrderSelection {
  std::size_t n = 0;
  bool met_tolerance = false;
  std::vector<double> residual_norms;     // ||r_n|| for n = 1..n_max
  std::vector<double> relative_residuals;  // ||r_n|| / ||y_n||
};

// Smallest n <= n_max with ||r_n|| / ||y_n|| < tol; the argmin when none
// qualifies.
OrderSelection select_order(const Trajectory& traj, const SpatialGrid& grid,
                            const SamplingConfig& config, double tol, std::size_t n_max,
                            std::size_t delays = 1);

enum class RhoFormula {
  // rho = -lambda_j <psi_1, psi_j> / (psi_u psi_j(1)), from integrating the
  // zero-eigenvalue problem by parts with the right boundary input.
  kBoundaryCorrected,
  // rho = -lambda_j <psi_1, psi_j> / psi_u, without the boundary factor.
  kWithoutBoundaryFactor,
};

// Per-mode diagnostics of the rho estimate.
struct RhoModeEstimate {
  Complex lambda;
  double rel_residual = 0.0;
  double rho = 0.0;                   // boundary-corrected formula
  double rho_without_boundary = 0.0;
  bool admissible = false;            // real positive root with small residual
  bool used = false;
};

// Plant modes with a larger relative residual are not used for rho.
inline constexpr double kRhoResidualCutoff = 1e-2;

struct RhoEstimate {
  double rho_hat = 0.0;
  std::vector<double> per_mode;       // one estimate per plant mode used
  double rho_without_boundary = 0.0;  // median of the alternative formula
  Complex mu_zero_mode;               // eigenvalue identified as lambda = 0
  std::size_t modes_used = 0;
  std::vector<RhoModeEstimate> modes;  // every plant mode, decreasing Re lambda
};

// Diffusion estimate from a step response with u2 = u0 s(t), u1 = 0. The data
// matrix is extended with a constant row u0 and fitted with order n + 1. The
// estimate is the median over the first min(4, n - 1) admissible plant modes.
RhoEstimate estimate_rho(const Trajectory& step_traj, const SpatialGrid& grid,
                         const SamplingConfig& config, double u0, std::size_t n,
                         RhoFormula formula = RhoFormula::kBoundaryCorrected);

}  // namespace koopctl
