#include "koopctl/stability.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "koopctl/discrete_operator.hpp"
#include "koopctl/error.hpp"
#include "koopctl/text_format.hpp"
#include "koopctl/tridiagonal.hpp"

namespace koopctl {

namespace {

template <typename Matrix>
double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()[0];
}


void check_feedback_shapes(const SpatialGrid& grid, const Eigen::MatrixXd& gain,
                           const Eigen::MatrixXd& modes) {
  if (gain.rows() != 2 || gain.cols() != modes.cols() ||
      modes.rows() != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidArgument("feedback: gain must be 2 x n and modes N x n on the grid");
  }
}

}  // namespace

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw InvalidArgument("lyapunov_solve: need a square matrix");
  const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues();
  const double abscissa = eig.real().maxCoeff();
  if (!(abscissa < 0.0)) {
    throw NumericalError("lyapunov_solve: matrix is not Hurwitz (max Re eigenvalue " +
                         format_double(abscissa) + ")");
  }
  // vec(A^T Pi + Pi A) = (I kron A^T + A^T kron I) vec(Pi)
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd at = a.transpose();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      big.block(i * n, j * n, n, n) = id(i, j) * at + at(i, j) * id;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(big);
  if (!lu.isInvertible()) throw NumericalError("lyapunov_solve: singular Kronecker system");
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(id.data(), n * n);
  Eigen::VectorXd x = lu.solve(rhs);
  x += lu.solve(rhs - big * x);  // one step of iterative refinement
  Eigen::MatrixXd pi = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
  pi = 0.5 * (pi + pi.transpose());
  return pi;
}

ErrorBounds error_bounds(const ModalModel& identified, const std::vector<Eigenpair>& reference,
                         double rho_true, const SpatialGrid& grid) {
  const auto n = static_cast<Eigen::Index>(identified.order());
  if (reference.size() < identified.order()) {
    throw InvalidArgument("error_bounds: reference has fewer modes than the identified model");
  }
  if (identified.modes.rows() != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidArgument("error_bounds: modes do not match the grid");
  }
  std::vector<std::size_t> pairing(static_cast<std::size_t>(n));
  std::vector<bool> used(reference.size(), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < reference.size(); ++j) {
      if (std::abs(identified.lambda[i] - reference[j].lambda) <
          std::abs(identified.lambda[i] - reference[best].lambda)) {
        best = j;
      }
    }
    if (used[best]) {
      throw InvalidArgument("error_bounds: mode pairing is not a bijection (reference mode " +
                            std::to_string(best + 1) + " matched twice)");
    }
    used[best] = true;
    pairing[static_cast<std::size_t>(i)] = best;
  }

  const Eigen::Index last = identified.modes.rows() - 1;
  ErrorBounds bounds;
  bounds.B_reference.resize(n, 2);
  Eigen::MatrixXcd delta_lambda = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd ref_modes(identified.modes.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigenpair& ref = reference[pairing[static_cast<std::size_t>(i)]];
    delta_lambda(i, i) = ref.lambda - identified.lambda[i];
    bounds.B_reference(i, 0) = -rho_true * ref.phi[0];
    bounds.B_reference(i, 1) = rho_true * ref.phi[last];
    ref_modes.col(i) = ref.phi.cast<Complex>();
  }
  bounds.eps_lambda = delta_lambda.diagonal().cwiseAbs().maxCoeff();
  bounds.eps_B = spectral_norm(Eigen::MatrixXcd(bounds.B_reference - identified.B));
  Eigen::MatrixXcd e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXcd diff = ref_modes.col(i) - identified.modes.col(i);
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = grid.inner(Eigen::VectorXcd(ref_modes.col(j)), diff);
  }
  bounds.c_phi = spectral_norm(e);
  return bounds;
}

RobustnessCertificate certify(const GainSynthesis& synth, const ModalModel& model,
                              const ErrorBounds& bounds, double lambda_tail_max) {
  const auto n = static_cast<Eigen::Index>(model.order());
  if (synth.K.rows() != 2 || synth.K.cols() != n) throw InvalidArgument("certify: gain shape");
  const Eigen::MatrixXcd a_cl = model.Lambda() - model.B * synth.K.cast<Complex>();
  if (a_cl.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, a_cl.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("certify: closed-loop modal matrix is not real");
  }
  RobustnessCertificate cert;
  cert.A_cl = a_cl.real();
  cert.Pi = lyapunov_solve(cert.A_cl);
  const Eigen::VectorXd pi_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cert.Pi).eigenvalues();
  cert.lambda_min_Pi = pi_eig.minCoeff();
  cert.lambda_max_Pi = pi_eig.maxCoeff();
  cert.bounds = bounds;
  cert.gain_norm = synth.gain_norm();
  cert.lambda_tail_max = lambda_tail_max;
  const Eigen::MatrixXcd pi_c = cert.Pi.cast<Complex>();
  const Eigen::MatrixXcd k_c = synth.K.cast<Complex>();
  if (bounds.B_reference.size() > 0) {
    cert.coupling_norm = spectral_norm(Eigen::MatrixXcd(pi_c * bounds.B_reference * k_c));
  } else {
    cert.coupling_norm = spectral_norm(Eigen::MatrixXcd(pi_c * model.B * k_c)) +
                         bounds.eps_B * cert.lambda_max_Pi * cert.gain_norm;
  }
  cert.gamma = 2.0 * ((bounds.eps_lambda + bounds.eps_B * cert.gain_norm) * cert.lambda_max_Pi +
                      bounds.c_phi * cert.coupling_norm) -
               1.0;
  cert.alpha_hat = cert.gamma / (2.0 * cert.lambda_max_Pi);
  cert.pass = cert.gamma < 0.0 && lambda_tail_max < cert.alpha_hat && cert.alpha_hat < 0.0;
  return cert;
}

DecayFit decay_fit(const Trajectory& traj, const SpatialGrid& grid, double t_start) {
  traj.validate();
  if (traj.size() == 0) throw InvalidArgument("decay_fit: empty trajectory");
  const double t0 = traj.t.front();
  const double x0 = grid.norm(traj.states.front());
  if (!(x0 > 0.0)) throw InvalidArgument("decay_fit: zero initial state");
  std::vector<double> ts, ls;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.t[k] < t_start) continue;
    const double norm = grid.norm(traj.states[k]);
    if (norm < 1e-14) break;
    ts.push_back(traj.t[k] - t0);
    ls.push_back(std::log(norm));
  }
  if (ts.size() < 2) throw InvalidArgument("decay_fit: fewer than two usable records after t_start");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(ts.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(ts.size()));
  for (std::size_t k = 0; k < ts.size(); ++k) {
    a(static_cast<Eigen::Index>(k), 0) = 1.0;
    a(static_cast<Eigen::Index>(k), 1) = ts[k];
    b[static_cast<Eigen::Index>(k)] = ls[k];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  DecayFit fit;
  fit.alpha = coef[1];
  fit.M = std::exp(coef[0]) / x0;
  fit.t_start = ts.front() + t0;
  fit.t_end = ts.back() + t0;
  fit.samples = ts.size();
  return fit;
}

Eigen::VectorXcd closed_loop_operator_spectrum(const ParabolicPlant& plant,
                                               const SpatialGrid& grid,
                                               const Eigen::MatrixXd& gain,
                                               const Eigen::MatrixXd& modes) {
  check_feedback_shapes(grid, gain, modes);
  const DiscreteOperator op = assemble_operator(plant, grid);
  // Similarity by W^{1/2} makes the open-loop part symmetric, which keeps
  // the nonsymmetric eigensolver well conditioned.
  const Eigen::VectorXd s = grid.weights().cwiseSqrt();
  Eigen::MatrixXd a = s.asDiagonal() * op.dense() * s.cwiseInverse().asDiagonal();
  if (gain.size() > 0) {
    const Eigen::MatrixXd g = s.asDiagonal() * op.input_matrix();
    const Eigen::MatrixXd f = s.asDiagonal() * modes;  // W^{1/2} modes
    a.noalias() -= g * (gain * f.transpose());
  }
  const auto n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(),
                                        wi.data(), nullptr, 1, nullptr, 1);
  if (info != 0) {
    throw NumericalError("closed-loop spectrum: LAPACK dgeev failed (info " + std::to_string(info) + ")");
  }
  Eigen::VectorXcd eig(n);
  for (lapack_int i = 0; i < n; ++i) eig[i] = Complex(wr[i], wi[i]);
  std::sort(eig.data(), eig.data() + eig.size(), spectral_order);
  return eig;
}

SpectrumReport verify_closed_loop_spectrum(const ParabolicPlant& plant, const SpatialGrid& grid,
                                           const GainSynthesis& synth,
                                           const Eigen::MatrixXd& modes, std::size_t n_check) {
  const auto n = static_cast<std::size_t>(synth.targets.size());
  const Eigen::VectorXcd closed = closed_loop_operator_spectrum(plant, grid, synth.K, modes);
  const std::vector<double> open =
      reference_eigenvalues(assemble_operator(plant, grid), n + n_check);

  SpectrumReport report;
  std::vector<bool> used(static_cast<std::size_t>(closed.size()), false);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex target = synth.targets[static_cast<Eigen::Index>(i)];
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < closed.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || std::abs(closed[j] - target) < std::abs(closed[best] - target)) best = j;
    }
    used[static_cast<std::size_t>(best)] = true;
    const double err = std::abs(closed[best] - target);
    report.targets.push_back({target, closed[best], err, open[i]});
    report.max_target_error = std::max(report.max_target_error, err);
  }
  std::size_t k = 0;
  for (Eigen::Index j = 0; j < closed.size() && k < n_check; ++j) {
    if (used[static_cast<std::size_t>(j)]) continue;
    TailShift shift;
    shift.index = n + k + 1;
    shift.open_loop = open[n + k];
    shift.closed_loop = closed[j];
    shift.displacement = std::abs(closed[j] - shift.open_loop);
    shift.relative = shift.displacement / std::max(1.0, std::abs(shift.open_loop));
    report.max_tail_relative = std::max(report.max_tail_relative, shift.relative);
    report.tail.push_back(shift);
    ++k;
  }
  return report;
}

Eigen::VectorXcd closed_loop_adjoint_eigenvector(const ParabolicPlant& plant,
                                                 const SpatialGrid& grid,
                                                 const Eigen::MatrixXd& gain,
                                                 const Eigen::MatrixXd& modes, Complex shift) {
  check_feedback_shapes(grid, gain, modes);
  const DiscreteOperator op = assemble_operator(plant, grid);
  using CVector = Eigen::VectorXcd;
  using CMatrix = Eigen::MatrixXcd;
  // A_cl^T - shift I = A^T - shift I - (W modes) K^T G^T.
  const CVector diag = (op.diag.cast<Complex>().array() - shift).matrix();
  TridiagonalSolver<Complex> base(op.upper.cast<Complex>(), diag, op.lower.cast<Complex>());
  const Eigen::MatrixXd wm = grid.weights().asDiagonal() * modes;
  const CMatrix u = (-(wm * gain.transpose())).cast<Complex>();
  const CMatrix v = op.input_matrix().cast<Complex>();
  const LowRankUpdatedSolver<Complex> solver(std::move(base), u, v);

  const auto n = static_cast<Eigen::Index>(grid.size());
  CVector z = CVector::Constant(n, Complex(1.0, 0.0));
  z /= z.norm();
  for (int it = 0; it < 200; ++it) {
    CVector next = solver.solve(z);
    next /= next.norm();
    // Align phase before measuring the change.
    const Complex c = next.dot(z);
    if (std::abs(c) > 0.0) next *= c / std::abs(c);
    const double change = (next - z).norm();
    z = std::move(next);
    if (change < 1e-13) break;
  }
  // z is an eigenvector of A_cl^T; the adjoint in the weighted inner product
  // is W^{-1} conj(z).
  CVector psi = z.conjugate().cwiseQuotient(grid.weights().cast<Complex>());
  psi /= grid.norm(psi);
  const Complex anchor = psi[0];
  if (std::abs(anchor) > 0.0) psi *= std::conj(anchor) / std::abs(anchor);
  return psi;
}

double aligned_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                        const SpatialGrid& grid) {
  const double na = grid.norm(a);
  const double nb = grid.norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("aligned_distance: zero function");
  const Eigen::VectorXcd ah = a / na;
  Eigen::VectorXcd bh = b / nb;
  const Complex c = grid.inner(ah, bh);
  if (std::abs(c) > 0.0) bh *= c / std::abs(c);
  return grid.norm(Eigen::VectorXcd(ah - bh));
}

}  // namespace koopctl
