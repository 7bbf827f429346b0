#include "koopctl/krylov_dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/interpolation.hpp"
#include "koopctl/text_format.hpp"

namespace koopctl {

namespace {

CompanionModel fit_snapshots(const Eigen::MatrixXd& d, double t_s) {
  const Eigen::Index n = d.cols() - 1;
  if (n < 1 || d.rows() < 1) throw InvalidArgument("fit_companion: need at least two snapshots");
  const Eigen::MatrixXd dn = d.leftCols(n);
  const Eigen::VectorXd xn = d.col(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dn, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kPseudoinverseCutoff);
  CompanionModel model;
  model.t_s = t_s;
  model.f = -svd.solve(xn);
  model.residual = dn * model.f + xn;
  model.effective_rank = static_cast<std::size_t>(svd.rank());
  return model;
}

// p(s) = s^n + f_{n-1} s^{n-1} + ... + f_0 and p'(s) by Horner.
std::pair<Complex, Complex> characteristic(const Eigen::VectorXd& f, Complex s) {
  Complex p = 1.0;
  Complex dp = 0.0;
  for (Eigen::Index k = f.size() - 1; k >= 0; --k) {
    dp = dp * s + p;
    p = p * s + f[k];
  }
  return {p, dp};
}

// Coefficients (ascending) of the Lagrange basis polynomial for root i.
Eigen::VectorXcd lagrange_coefficients(const std::vector<Complex>& mu, std::size_t i) {
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
  c[0] = 1.0;
  Eigen::Index degree = 0;
  Complex denom = 1.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (j == i) continue;
    // c <- c * (s - mu_j)
    ++degree;
    for (Eigen::Index k = degree; k >= 1; --k) c[k] = c[k - 1] - mu[j] * c[k];
    c[0] = -mu[j] * c[0];
    denom *= mu[i] - mu[j];
  }
  return c / denom;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Eigen::MatrixXd CompanionModel::companion_matrix() const {
  const auto n = f.size();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) F(k, k - 1) = 1.0;
  F.col(n - 1) = -f;
  return F;
}

CompanionModel fit_companion(const DataMatrix& data) {
  data.validate();
  return fit_snapshots(data.D, data.config.t_s);
}

std::vector<CompanionEigenvector> companion_eigen(const CompanionModel& model) {
  const std::size_t n = model.order();
  if (n == 0) throw InvalidArgument("companion_eigen: empty model");
  Eigen::EigenSolver<Eigen::MatrixXd> es(model.companion_matrix(), false);
  if (es.info() != Eigen::Success) throw NumericalError("companion_eigen: eigensolver failed");
  std::vector<Complex> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex s = es.eigenvalues()[static_cast<Eigen::Index>(i)];
    // Newton polish on the characteristic polynomial; keeps real roots real.
    for (int it = 0; it < 3; ++it) {
      const auto [p, dp] = characteristic(model.f, s);
      if (dp == 0.0) break;
      const Complex next = s - p / dp;
      if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
      if (std::abs(characteristic(model.f, next).first) >= std::abs(p)) break;
      s = next;
    }
    mu[i] = s;
  }
  double scale = 0.0;
  for (const auto& m : mu) scale = std::max(scale, std::abs(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(mu[i] - mu[j]) <= 1e-10 * scale) {
        throw NumericalError("companion_eigen: simple-eigenvalue assumption violated (roots " +
                             std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                             " coincide)");
      }
    }
  }
  std::vector<CompanionEigenvector> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {mu[i], lagrange_coefficients(mu, i)};
  return out;
}

Eigen::VectorXcd KoopmanSpectrum::eigenvalues() const {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(modes.size()));
  for (std::size_t i = 0; i < modes.size(); ++i) out[static_cast<Eigen::Index>(i)] = modes[i].lambda_hat;
  return out;
}

bool spectral_order(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

Eigen::VectorXcd normalize_mode(const std::vector<double>& sensors, const Eigen::VectorXcd& samples,
                                const SpatialGrid& grid, Complex* amplitude) {
  Eigen::VectorXcd mode = spline_interpolate(sensors, samples, grid.nodes());
  const double norm = grid.norm(mode);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("normalize_mode: zero-norm mode");
  Complex anchor = mode[0];
  if (std::abs(anchor) == 0.0) {
    Eigen::Index k = 0;
    mode.cwiseAbs().maxCoeff(&k);
    anchor = mode[k];
  }
  const Complex phase = anchor / std::abs(anchor);
  const Complex scale = norm * phase;
  mode /= scale;
  mode[0] = Complex(mode[0].real(), 0.0);
  if (amplitude) *amplitude = scale;
  return mode;
}

KoopmanSpectrum extract_spectrum(const DataMatrix& data, const CompanionModel& model,
                                 const SpatialGrid& grid) {
  data.validate();
  const auto n = static_cast<Eigen::Index>(model.order());
  if (data.D.cols() != n + 1) throw InvalidArgument("extract_spectrum: model order does not match data");
  KoopmanSpectrum spectrum;
  spectrum.model = model;
  spectrum.sensors = data.config.centers;
  if (model.rank_deficient()) {
    spectrum.warnings.push_back("data matrix rank " + std::to_string(model.effective_rank) +
                                " below order " + std::to_string(model.order()));
  }
  const auto m = static_cast<Eigen::Index>(data.config.channels());
  const Eigen::MatrixXcd dn = data.D.leftCols(n).cast<Complex>();
  const double r_norm = model.residual.norm();
  for (auto& [mu, v] : companion_eigen(model)) {
    KoopmanEigenpair pair;
    pair.mu = mu;
    pair.lambda_hat = std::log(mu) / model.t_s;
    pair.samples = dn * v;
    const double s_norm = pair.samples.norm();
    if (!(s_norm > 0.0)) {
      spectrum.warnings.push_back("mode for mu = " + format_double(mu.real()) + (mu.imag() < 0 ? "" : "+") +
                                  format_double(mu.imag()) + "i has zero norm; excluded");
      continue;
    }
    pair.rel_residual = r_norm * std::abs(v[n - 1]) / s_norm;
    try {
      pair.mode = normalize_mode(spectrum.sensors, pair.samples.head(m), grid, &pair.amplitude);
    } catch (const NumericalError&) {
      spectrum.warnings.push_back("mode for lambda = " + format_double(pair.lambda_hat.real()) +
                                  " vanishes at the sensors; excluded");
      continue;
    }
    spectrum.modes.push_back(std::move(pair));
  }
  std::sort(spectrum.modes.begin(), spectrum.modes.end(),
            [](const KoopmanEigenpair& a, const KoopmanEigenpair& b) {
              return spectral_order(a.lambda_hat, b.lambda_hat);
            });
  return spectrum;
}

KoopmanSpectrum krylov_dmd(const DataMatrix& data, const SpatialGrid& grid) {
  return extract_spectrum(data, fit_companion(data), grid);
}

OrderSelection select_order(const Trajectory& traj, const SpatialGrid& grid,
                            const SamplingConfig& config, double tol, std::size_t n_max,
                            std::size_t delays) {
  if (n_max == 0) throw InvalidArgument("select_order: n_max must be >= 1");
  if (delays == 0) throw InvalidArgument("select_order: delays must be >= 1");
  OrderSelection sel;
  std::size_t best = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    DataMatrix data = build_data_matrix(traj, grid, config, n + delays - 1);
    if (delays > 1) data = delay_embed(data, delays);
    const CompanionModel model = fit_companion(data);
    const double r = model.residual.norm();
    const double y = data.D.col(data.D.cols() - 1).norm();
    sel.residual_norms.push_back(r);
    sel.relative_residuals.push_back(y > 0.0 ? r / y : r);
    if (sel.relative_residuals.back() < sel.relative_residuals[best]) best = n - 1;
    if (sel.relative_residuals.back() < tol) {
      sel.n = n;
      sel.met_tolerance = true;
      return sel;
    }
  }
  sel.n = best + 1;
  return sel;
}

RhoEstimate estimate_rho(const Trajectory& step_traj, const SpatialGrid& grid,
                         const SamplingConfig& config, double u0, std::size_t n,
                         RhoFormula formula) {
  if (u0 == 0.0) throw InvalidArgument("estimate_rho: u0 must be nonzero");
  if (n < 2) throw InvalidArgument("estimate_rho: need at least two plant modes");
  const DataMatrix data = build_data_matrix(step_traj, grid, config, n + 1);
  const auto m = data.D.rows();
  Eigen::MatrixXd ext(m + 1, data.D.cols());
  ext.row(0).setConstant(u0);
  ext.bottomRows(m) = data.D;
  const CompanionModel model = fit_snapshots(ext, config.t_s);
  const auto order = static_cast<Eigen::Index>(model.order());
  const Eigen::MatrixXcd dn = ext.leftCols(order).cast<Complex>();

  struct Candidate {
    Complex mu;
    Complex lambda;
    Eigen::VectorXcd samples;
    double rel_residual;
  };
  std::vector<Candidate> modes;
  const double r_norm = model.residual.norm();
  for (auto& [mu, v] : companion_eigen(model)) {
    Eigen::VectorXcd samples = dn * v;
    const double rel = r_norm * std::abs(v[order - 1]) / samples.norm();
    modes.push_back({mu, std::log(mu) / config.t_s, std::move(samples), rel});
  }
  auto zero = std::min_element(modes.begin(), modes.end(), [](const Candidate& a, const Candidate& b) {
    return std::abs(a.mu - 1.0) < std::abs(b.mu - 1.0);
  });
  if (std::abs(zero->mu - 1.0) > 0.05) {
    throw NumericalError("estimate_rho: zero-eigenvalue mode not found");
  }
  RhoEstimate est;
  est.mu_zero_mode = zero->mu;
  const Complex psi_u = zero->samples[0];
  if (std::abs(psi_u) < 1e-12 * zero->samples.norm()) {
    throw NumericalError("estimate_rho: degenerate zero mode (input component vanishes)");
  }
  const Eigen::VectorXcd psi1 = spline_interpolate(config.centers, zero->samples.tail(m), grid.nodes());
  modes.erase(zero);
  std::sort(modes.begin(), modes.end(), [](const Candidate& a, const Candidate& b) {
    return spectral_order(a.lambda, b.lambda);
  });

  const Eigen::VectorXcd w = grid.weights().cast<Complex>();
  std::vector<double> corrected, plain;
  for (const Candidate& c : modes) {
    RhoModeEstimate entry;
    entry.lambda = c.lambda;
    entry.rel_residual = c.rel_residual;
    // The plant is self-adjoint: complex or negative roots are not plant modes.
    entry.admissible = c.mu.imag() == 0.0 && c.mu.real() > 0.0 && c.rel_residual < kRhoResidualCutoff;
    const Eigen::VectorXcd psi_j = normalize_mode(config.centers, c.samples.tail(m), grid);
    const Complex overlap = (w.array() * psi1.array() * psi_j.array()).sum();
    const Complex numerator = -c.lambda * overlap;
    entry.rho = (numerator / (psi_u * psi_j[psi_j.size() - 1])).real();
    entry.rho_without_boundary = (numerator / psi_u).real();
    entry.used = entry.admissible && corrected.size() < std::min<std::size_t>(4, n - 1);
    if (entry.used) {
      corrected.push_back(entry.rho);
      plain.push_back(entry.rho_without_boundary);
    }
    est.modes.push_back(entry);
  }
  if (corrected.empty()) throw NumericalError("estimate_rho: no resolved plant modes");
  est.per_mode = formula == RhoFormula::kBoundaryCorrected ? corrected : plain;
  est.rho_without_boundary = median(plain);
  est.rho_hat = median(est.per_mode);
  est.modes_used = corrected.size();
  return est;
}

}  // namespace koopctl
