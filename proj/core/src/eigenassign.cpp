#include "koopctl/eigenassign.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "koopctl/error.hpp"
#include "koopctl/text_format.hpp"

namespace koopctl {

namespace {

constexpr double kSingularCondition = 1e14;

bool nearly_equal(Complex a, Complex b) {
  return std::abs(a - b) <= 1e-10 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

std::string complex_text(Complex z) {
  if (z.imag() == 0.0) return format_double(z.real());
  return format_double(z.real()) + (z.imag() < 0 ? "-" : "+") + format_double(std::abs(z.imag())) + "i";
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
}

double condition_number(const Eigen::MatrixXcd& m) {
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues();
  const double smin = s[s.size() - 1];
  return smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXcd assigned_vectors(const ModalModel& model, const Eigen::VectorXcd& targets,
                                  const Eigen::MatrixXcd& P) {
  const auto n = static_cast<Eigen::Index>(model.order());
  Eigen::MatrixXcd V(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXcd bp = model.B * P.col(i);
    V.col(i) = bp.array() / (model.lambda.array() - targets[i]);
  }
  return V;
}

// Spectral norm of K = P V~^{-1}, or nullopt when V~ is numerically singular.
std::optional<double> gain_objective(const ModalModel& model, const Eigen::VectorXcd& targets,
                                     const Eigen::MatrixXcd& P) {
  const Eigen::MatrixXcd V = assigned_vectors(model, targets, P);
  if (!V.allFinite() || condition_number(V) > 1e12) return std::nullopt;
  const Eigen::MatrixXcd K = P * V.inverse();
  const double value = spectral_norm(K.real());
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

// Maps the free parameters to P: real targets own a real p_i (two
// parameters), each conjugate pair shares one complex p (four parameters).
struct ParameterLayout {
  std::vector<Eigen::Index> offset;  // parameter offset per target, -1 for a conjugate partner
  std::vector<Eigen::Index> partner;
  std::size_t count = 0;

  ParameterLayout(const Eigen::VectorXcd& targets) {
    const auto n = targets.size();
    offset.assign(static_cast<std::size_t>(n), -1);
    partner.assign(static_cast<std::size_t>(n), -1);
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      taken[static_cast<std::size_t>(i)] = true;
      offset[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(count);
      if (targets[i].imag() == 0.0) {
        count += 2;
        continue;
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!taken[static_cast<std::size_t>(j)] && nearly_equal(targets[j], std::conj(targets[i]))) {
          taken[static_cast<std::size_t>(j)] = true;
          partner[static_cast<std::size_t>(i)] = j;
          break;
        }
      }
      if (partner[static_cast<std::size_t>(i)] < 0) {
        throw InvalidArgument("targets are not closed under conjugation: " + complex_text(targets[i]));
      }
      count += 4;
    }
  }

  Eigen::MatrixXcd unpack(const gsl_vector* theta, double box, Eigen::Index n) const {
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(2, n);
    auto p = [&](std::size_t k) { return box * std::sin(gsl_vector_get(theta, k)); };
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index o = offset[static_cast<std::size_t>(i)];
      if (o < 0) continue;
      const auto k = static_cast<std::size_t>(o);
      const Eigen::Index j = partner[static_cast<std::size_t>(i)];
      if (j < 0) {
        P(0, i) = p(k);
        P(1, i) = p(k + 1);
      } else {
        P(0, i) = Complex(p(k), p(k + 2));
        P(1, i) = Complex(p(k + 1), p(k + 3));
        P.col(j) = P.col(i).conjugate();
      }
    }
    return P;
  }
};

struct ObjectiveContext {
  const ModalModel* model;
  const Eigen::VectorXcd* targets;
  const ParameterLayout* layout;
  double box;
};

constexpr double kInfeasiblePenalty = 1e10;

double objective(const gsl_vector* theta, void* params) {
  const auto* ctx = static_cast<const ObjectiveContext*>(params);
  const Eigen::MatrixXcd P =
      ctx->layout->unpack(theta, ctx->box, static_cast<Eigen::Index>(ctx->model->order()));
  return gain_objective(*ctx->model, *ctx->targets, P).value_or(kInfeasiblePenalty);
}

}  // namespace

Eigen::MatrixXd ModalModel::real_modes(double tol) const {
  if (modes.size() > 0 && modes.imag().cwiseAbs().maxCoeff() > tol) {
    throw InvalidArgument("modal model has complex modes; a real feedback functional needs real modes");
  }
  return modes.real();
}

ModalModel build_modal_model(const KoopmanSpectrum& spectrum, std::size_t n, double rho_hat) {
  if (!(rho_hat > 0.0)) throw InvalidArgument("build_modal_model: rho_hat must be positive");
  if (n == 0 || spectrum.size() < n) {
    throw InvalidArgument("build_modal_model: spectrum has " + std::to_string(spectrum.size()) +
                          " modes, need " + std::to_string(n));
  }
  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::Index grid_size = spectrum.modes.front().mode.size();
  ModalModel model;
  model.rho_hat = rho_hat;
  model.lambda.resize(nn);
  model.B.resize(nn, 2);
  model.modes.resize(grid_size, nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const auto& pair = spectrum.modes[static_cast<std::size_t>(i)];
    model.lambda[i] = pair.lambda_hat;
    model.modes.col(i) = pair.mode;
    const Complex left = pair.mode[0];
    const Complex right = pair.mode[grid_size - 1];
    if (std::abs(left) < 1e-6 || std::abs(right) < 1e-6) {
      throw NumericalError("build_modal_model: near-uncontrollable mode " + std::to_string(i + 1) +
                           " (boundary value below 1e-6)");
    }
    model.B(i, 0) = -rho_hat * left;
    model.B(i, 1) = rho_hat * right;
  }
  model.tail.resize(static_cast<Eigen::Index>(spectrum.size() - n));
  for (std::size_t i = n; i < spectrum.size(); ++i) {
    model.tail[static_cast<Eigen::Index>(i - n)] = spectrum.modes[i].lambda_hat;
  }
  return model;
}

ModalModel modal_model_from_reference(const std::vector<Eigenpair>& pairs, std::size_t n,
                                      double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("modal_model_from_reference: rho must be positive");
  if (n == 0 || pairs.size() < n) throw InvalidArgument("modal_model_from_reference: too few pairs");
  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::Index grid_size = pairs.front().phi.size();
  ModalModel model;
  model.rho_hat = rho;
  model.lambda.resize(nn);
  model.B.resize(nn, 2);
  model.modes.resize(grid_size, nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const auto& pair = pairs[static_cast<std::size_t>(i)];
    model.lambda[i] = pair.lambda;
    model.modes.col(i) = pair.phi.cast<Complex>();
    model.B(i, 0) = -rho * pair.phi[0];
    model.B(i, 1) = rho * pair.phi[grid_size - 1];
  }
  model.tail.resize(static_cast<Eigen::Index>(pairs.size() - n));
  for (std::size_t i = n; i < pairs.size(); ++i) {
    model.tail[static_cast<Eigen::Index>(i - n)] = pairs[i].lambda;
  }
  return model;
}

bool AssignabilityReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string AssignabilityReport::summary() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "ok   " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << ": " << c.detail;
    out << '\n';
  }
  return out.str();
}

AssignabilityReport assignability_check(const ModalModel& model, const Eigen::VectorXcd& targets) {
  AssignabilityReport report;
  const auto n = static_cast<Eigen::Index>(model.order());
  auto add = [&](std::string name, bool passed, std::string detail) {
    report.checks.push_back({std::move(name), passed, std::move(detail)});
  };

  add("target count", targets.size() == n,
      std::to_string(targets.size()) + " targets for " + std::to_string(n) + " modes");

  std::string detail;
  for (Eigen::Index i = 0; i < n && detail.empty(); ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (nearly_equal(model.lambda[i], model.lambda[j])) {
        detail = "eigenvalues " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " coincide";
        break;
      }
    }
  }
  add("distinct eigenvalues", detail.empty(), detail);

  detail.clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (model.B.row(i).norm() == 0.0) {
      detail += (detail.empty() ? "zero row " : ", ") + std::to_string(i + 1);
    }
  }
  add("nonzero input rows", detail.empty(), detail);

  detail.clear();
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (nearly_equal(targets[i], model.lambda[j])) {
        detail += (detail.empty() ? "" : "; ") + std::string("resolvent singular: target ") +
                  std::to_string(i + 1) + " equals eigenvalue " + std::to_string(j + 1);
      }
    }
  }
  add("targets outside model spectrum", detail.empty(), detail);

  detail.clear();
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    for (Eigen::Index j = 0; j < model.tail.size(); ++j) {
      if (nearly_equal(targets[i], model.tail[j])) {
        detail += (detail.empty() ? "" : "; ") + std::string("target ") + std::to_string(i + 1) +
                  " equals tail eigenvalue " + std::to_string(n + j + 1);
      }
    }
  }
  add("targets outside estimated tail", detail.empty(), detail);

  detail.clear();
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    for (Eigen::Index j = i + 1; j < targets.size(); ++j) {
      if (nearly_equal(targets[i], targets[j])) {
        detail = "targets " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " coincide";
      }
    }
  }
  add("distinct targets", detail.empty(), detail);

  detail.clear();
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (targets[i].imag() == 0.0) continue;
    bool found = false;
    for (Eigen::Index j = 0; j < targets.size(); ++j) {
      found = found || (j != i && nearly_equal(targets[j], std::conj(targets[i])));
    }
    if (!found) detail += (detail.empty() ? "missing conjugate of " : ", ") + complex_text(targets[i]);
  }
  add("self-conjugate targets", detail.empty(), detail);
  return report;
}

double GainSynthesis::gain_norm() const { return spectral_norm(K); }

Eigen::VectorXcd sorted_eigenvalues(const Eigen::MatrixXcd& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solve failed");
  Eigen::VectorXcd e = es.eigenvalues();
  std::sort(e.data(), e.data() + e.size(), spectral_order);
  return e;
}

double spectrum_mismatch(const Eigen::VectorXcd& targets, const Eigen::VectorXcd& eigenvalues) {
  if (eigenvalues.size() < targets.size()) {
    throw InvalidArgument("spectrum_mismatch: fewer eigenvalues than targets");
  }
  std::vector<bool> used(static_cast<std::size_t>(eigenvalues.size()), false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || std::abs(eigenvalues[j] - targets[i]) < std::abs(eigenvalues[best] - targets[i])) {
        best = j;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    worst = std::max(worst, std::abs(eigenvalues[best] - targets[i]) / std::max(1.0, std::abs(targets[i])));
  }
  return worst;
}

GainSynthesis parametric_gain(const ModalModel& model, const Eigen::VectorXcd& targets,
                              const Eigen::MatrixXcd& P) {
  const auto n = static_cast<Eigen::Index>(model.order());
  if (targets.size() != n || P.rows() != 2 || P.cols() != n) {
    throw InvalidArgument("parametric_gain: need n targets and a 2 x n parameter matrix");
  }
  const AssignabilityReport report = assignability_check(model, targets);
  if (!report.ok()) throw InvalidArgument("parametric_gain: not assignable\n" + report.summary());

  GainSynthesis synth;
  synth.targets = targets;
  synth.P = P;
  synth.V_tilde = assigned_vectors(model, targets, P);
  synth.cond_V = condition_number(synth.V_tilde);
  if (!(synth.cond_V < kSingularCondition)) {
    throw NumericalError("parametric_gain: assigned vectors are linearly dependent (cond = " +
                         format_double(synth.cond_V) + ")");
  }
  const Eigen::MatrixXcd K = P * synth.V_tilde.inverse();
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if (K.imag().cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("parametric_gain: gain is complex; targets and P must be conjugate-symmetric");
  }
  synth.K = K.real();
  synth.achieved = sorted_eigenvalues(model.Lambda() - model.B * synth.K.cast<Complex>());
  const double mismatch = spectrum_mismatch(targets, synth.achieved);
  if (mismatch > 1e-8) {
    throw NumericalError("parametric_gain: assigned spectrum off by " + format_double(mismatch) +
                         " (cond V = " + format_double(synth.cond_V) + ")");
  }
  return synth;
}

ClosedLoopEigenstructure closed_loop_eigenstructure(const GainSynthesis& synth,
                                                    const ModalModel& model,
                                                    const std::vector<Eigenpair>& tail,
                                                    const SpatialGrid& grid,
                                                    std::string tail_source) {
  const auto n = static_cast<Eigen::Index>(model.order());
  const auto nt = static_cast<Eigen::Index>(tail.size());
  const Eigen::Index nodes = model.modes.rows();
  if (nodes != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidArgument("closed_loop_eigenstructure: modes do not match the grid");
  }
  const Eigen::MatrixXcd v_inv = synth.V_tilde.inverse();

  ClosedLoopEigenstructure out;
  out.tail_source = std::move(tail_source);
  out.coefficients.resize(n + nt, n);
  out.psi.resize(nodes, n + nt);
  out.partial_sums.resize(n + nt);

  for (Eigen::Index i = 0; i < n; ++i) out.coefficients.row(i) = v_inv.row(i).conjugate();
  for (Eigen::Index k = 0; k < nt; ++k) {
    const Eigenpair& pair = tail[static_cast<std::size_t>(k)];
    if (pair.phi.size() != nodes) throw InvalidArgument("closed_loop_eigenstructure: tail mode size");
    Eigen::RowVector2cd b(-model.rho_hat * pair.phi[0], model.rho_hat * pair.phi[nodes - 1]);
    Eigen::RowVectorXcd row = b * synth.P;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex gap = synth.targets[j] - pair.lambda;
      if (std::abs(gap) < 1e-12 * std::max(1.0, std::abs(pair.lambda))) {
        throw NumericalError("closed_loop_eigenstructure: target " + std::to_string(j + 1) +
                             " collides with tail eigenvalue " + std::to_string(n + k + 1));
      }
      row[j] /= gap;
    }
    out.coefficients.row(n + k) = (row * v_inv).conjugate();
  }

  double sum = 0.0;
  for (Eigen::Index i = 0; i < n + nt; ++i) {
    Eigen::VectorXcd psi = model.modes * out.coefficients.row(i).transpose();
    Eigen::VectorXcd phi = i < n ? Eigen::VectorXcd(model.modes.col(i))
                                 : Eigen::VectorXcd(tail[static_cast<std::size_t>(i - n)].phi.cast<Complex>());
    if (i >= n) psi += phi;
    const double d = grid.norm(Eigen::VectorXcd(psi - phi));
    sum += d * d;
    out.partial_sums[i] = sum;
    out.psi.col(i) = psi;
  }
  return out;
}

ParameterSearch optimize_parameters(const ModalModel& model, const Eigen::VectorXcd& targets,
                                    const OptimizerOptions& options) {
  if (!(options.box > 0.0) || options.starts == 0) {
    throw InvalidArgument("optimize_parameters: box must be positive and starts >= 1");
  }
  const AssignabilityReport report = assignability_check(model, targets);
  if (!report.ok()) throw InvalidArgument("optimize_parameters: not assignable\n" + report.summary());

  gsl_set_error_handler_off();
  const ParameterLayout layout(targets);
  ObjectiveContext ctx{&model, &targets, &layout, options.box};
  gsl_multimin_function fn{&objective, layout.count, &ctx};
  const auto n = static_cast<Eigen::Index>(model.order());

  using Minimizer = std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)>;
  using Vector = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  Minimizer solver(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, layout.count),
                   &gsl_multimin_fminimizer_free);
  Vector theta(gsl_vector_alloc(layout.count), &gsl_vector_free);
  Vector step(gsl_vector_alloc(layout.count), &gsl_vector_free);
  gsl_vector_set_all(step.get(), 0.3);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> angle(-M_PI / 2, M_PI / 2);

  ParameterSearch best;
  best.gain_norm = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < options.starts; ++s) {
    for (std::size_t k = 0; k < layout.count; ++k) gsl_vector_set(theta.get(), k, angle(rng));
    gsl_multimin_fminimizer_set(solver.get(), &fn, theta.get(), step.get());
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), 1e-10) == GSL_SUCCESS) break;
    }
    const double value = solver->fval;
    if (!(value < kInfeasiblePenalty)) continue;
    ++best.feasible_starts;
    if (value < best.gain_norm) {
      best.gain_norm = value;
      best.best_start = s;
      best.P = layout.unpack(gsl_multimin_fminimizer_x(solver.get()), options.box, n);
    }
  }
  if (best.feasible_starts == 0) throw NumericalError("optimize_parameters: every start was infeasible");
  return best;
}

}  // namespace koopctl
