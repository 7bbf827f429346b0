#include "koopctl/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include "koopctl/discrete_operator.hpp"
#include "koopctl/eigensolve.hpp"
#include "koopctl/error.hpp"
#include "koopctl/krylov_dmd.hpp"
#include "koopctl/observables.hpp"
#include "koopctl/serialization.hpp"
#include "koopctl/simulate.hpp"
#include "koopctl/stability.hpp"
#include "koopctl/text_format.hpp"
#include "koopctl/trajectory_io.hpp"

namespace koopctl {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kInitialState = "initial_state.csv";
constexpr const char* kOpenLoop = "open_loop.bin";
constexpr const char* kStepResponse = "step_response.bin";
constexpr const char* kDataMatrix = "data_matrix.csv";
constexpr const char* kSpectrum = "spectrum.json";
constexpr const char* kRho = "rho_estimate.json";
constexpr const char* kGain = "gain.json";
constexpr const char* kCertificate = "certificate.json";
constexpr const char* kVerification = "verification.json";
constexpr const char* kDelaySpectrum = "spectrum_delay.json";
constexpr const char* kDelayComparison = "delay_comparison.json";

// Acceptance thresholds for the built-in example.
constexpr double kLambda1 = 7.0034;

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

fs::path require(const fs::path& out, const char* name) {
  const fs::path p = out / name;
  if (!fs::exists(p)) throw InputError("missing artifact " + p.string() + " (run the earlier stage first)");
  return p;
}

void prepare(const ExperimentConfig& config, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());
  std::ofstream(out / "config.toml") << config_to_toml(config, false);
}

template <class Body>
void run_stage(const char* name, const ExperimentConfig& config, const fs::path& out, Body&& body) {
  auto wrap = [&](const std::exception& e) { return std::string(name) + ": " + e.what(); };
  try {
    config.validate();
    prepare(config, out);
    body();
  } catch (const InputError& e) {
    write_manifest(out);
    throw InputError(wrap(e));
  } catch (const InvalidArgument& e) {
    write_manifest(out);
    throw InvalidArgument(wrap(e));
  } catch (const NumericalError& e) {
    write_manifest(out);
    throw NumericalError(wrap(e));
  } catch (const Error& e) {
    write_manifest(out);
    throw Error(wrap(e));
  }
  write_manifest(out);
}

SamplingConfig sampling(const ExperimentConfig& c) {
  if (!c.centers.empty()) return SamplingConfig{c.centers, c.epsilon, c.t_s};
  return SamplingConfig::equispaced(c.sensors, c.t_s, c.epsilon);
}

double integrator_step(const ExperimentConfig& c) { return c.t_s / static_cast<double>(c.substeps); }

std::size_t whole_periods(double span, double period, const char* what) {
  const double k = span / period;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, r)) {
    throw InvalidArgument(std::string(what) + " must be a whole number of sampling periods");
  }
  return static_cast<std::size_t>(r);
}

// Transitions needed by the open-loop DMD runs.
std::size_t open_loop_periods(const ExperimentConfig& c) {
  const std::size_t n = c.order.value_or(c.order_max);
  return std::max(n + c.delays - 1, n + c.delay_mode_delays - 1);
}

Trajectory drop_before(const Trajectory& traj, double t0) {
  Trajectory out;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.t[k] < t0 - 1e-9 * std::max(1.0, std::abs(t0))) continue;
    out.t.push_back(traj.t[k]);
    out.states.push_back(traj.states[k]);
    out.u1.push_back(traj.u1[k]);
    out.u2.push_back(traj.u2[k]);
  }
  return out;
}

DataMatrix embedded_data(const Trajectory& traj, const SpatialGrid& grid, const SamplingConfig& s,
                         std::size_t n, std::size_t delays) {
  DataMatrix data = build_data_matrix(traj, grid, s, n + delays - 1);
  return delays > 1 ? delay_embed(data, delays) : data;
}

double rho_hat(const ExperimentConfig& c, const fs::path& out) {
  if (!c.estimate_rho) return c.plant.rho;
  return read_rho_json(require(out, kRho)).rho_hat;
}

Eigen::VectorXcd target_vector(const ExperimentConfig& c) {
  Eigen::VectorXcd t(static_cast<Eigen::Index>(c.targets.size()));
  for (std::size_t i = 0; i < c.targets.size(); ++i) t[static_cast<Eigen::Index>(i)] = c.targets[i];
  return t;
}

struct Loaded {
  SpatialGrid grid;
  KoopmanSpectrum spectrum;
  ModalModel model;
  GainSynthesis synth;
};

Loaded load_synthesis(const ExperimentConfig& c, const fs::path& out) {
  SpatialGrid grid(c.grid_nodes);
  KoopmanSpectrum spectrum = read_spectrum_json(require(out, kSpectrum), grid);
  ModalModel model = build_modal_model(spectrum, c.assigned_modes, rho_hat(c, out));
  GainSynthesis synth = read_gain_json(require(out, kGain));
  const Eigen::VectorXcd targets = target_vector(c);
  if (synth.targets.size() != targets.size() ||
      (synth.targets - targets).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, targets.cwiseAbs().maxCoeff())) {
    throw InputError("gain.json targets do not match the configuration");
  }
  if (synth.K.cols() != static_cast<Eigen::Index>(model.order())) {
    throw InputError("gain.json does not match the number of assigned modes");
  }
  return {std::move(grid), std::move(spectrum), std::move(model), std::move(synth)};
}

std::vector<Eigenpair> reference_pairs(const ExperimentConfig& c, const SpatialGrid& grid,
                                       std::size_t count) {
  return eigensolve_reference(assemble_operator(c.plant, grid), grid, std::min(count, grid.size()));
}

StateProfile initial_state(const fs::path& out) {
  const Trajectory x0 = read_trajectory_csv(require(out, kInitialState));
  if (x0.size() != 1) throw InputError("initial_state.csv must hold exactly one record");
  return x0.at(0);
}

json decay_json(const DecayFit& fit) {
  return {{"alpha", fit.alpha}, {"M", fit.M}, {"t_start", fit.t_start}, {"t_end", fit.t_end},
          {"samples", fit.samples}};
}

CheckResult check(std::string name, bool passed, std::string detail) {
  return {std::move(name), passed, std::move(detail)};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_manifest(const fs::path& out) {
  std::vector<std::pair<std::string, std::uintmax_t>> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(out, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    files.emplace_back(name, entry.file_size());
  }
  std::sort(files.begin(), files.end());
  json list = json::array();
  for (const auto& [name, size] : files) list.push_back({{"file", name}, {"bytes", size}});
  write_json_file({{"files", list}}, out / "manifest.json");
}

void run_simulate(const ExperimentConfig& c, const fs::path& out) {
  run_stage("simulate", c, out, [&] {
    const SpatialGrid grid(c.grid_nodes);
    const double dt = integrator_step(c);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));

    // Boundary pulse on the left end drives the plant away from rest.
    const double amp = c.pulse_amplitude;
    const std::size_t pulse_steps = step_count(-c.pulse_duration, 0.0, dt);
    const Trajectory pulse = simulate(c.plant, grid, {zero, -c.pulse_duration},
                                      [amp](double t) { return t < 0.0 ? amp : 0.0; }, zero_signal(),
                                      {0.0, dt, pulse_steps});
    Trajectory x0;
    x0.t = {0.0};
    x0.states = {pulse.back().values};
    x0.u1 = {0.0};
    x0.u2 = {0.0};
    write_trajectory_csv(x0, out / kInitialState);

    const double horizon = static_cast<double>(open_loop_periods(c)) * c.t_s;
    write_trajectory_binary(simulate(c.plant, grid, x0.at(0), zero_signal(), zero_signal(),
                                     {horizon, dt, c.substeps}),
                            out / kOpenLoop);

    if (c.estimate_rho) {
      const std::size_t settle = whole_periods(c.step_settle, c.t_s, "rho.settle");
      const double u0 = c.step_u0;
      const double t_end = static_cast<double>(settle + c.rho_order + 1) * c.t_s;
      write_trajectory_binary(simulate(c.plant, grid, {zero, 0.0}, zero_signal(),
                                       [u0](double) { return u0; }, {t_end, dt, c.substeps}),
                              out / kStepResponse);
    }
  });
}

void run_dmd(const ExperimentConfig& c, const fs::path& out, bool delay_mode) {
  run_stage("dmd", c, out, [&] {
    const SpatialGrid grid(c.grid_nodes);
    const SamplingConfig s = sampling(c);

    DataMatrix data;
    std::optional<OrderSelection> selection;
    std::optional<Trajectory> traj;
    if (fs::exists(out / kOpenLoop)) {
      traj = read_trajectory_binary(out / kOpenLoop);
      std::size_t n = c.order.value_or(0);
      if (!c.order) {
        selection = select_order(*traj, grid, s, c.order_tol, c.order_max, c.delays);
        n = selection->n;
      }
      data = embedded_data(*traj, grid, s, n, c.delays);
      write_data_matrix_csv(data, out / kDataMatrix);
    } else {
      data = read_data_matrix_csv(require(out, kDataMatrix));
    }
    const KoopmanSpectrum spectrum = krylov_dmd(data, grid);
    write_spectrum_json(spectrum, selection ? &*selection : nullptr, out / kSpectrum);
    if (spectrum.modes.empty()) {
      std::string why = "no usable Koopman modes";
      for (const auto& w : spectrum.warnings) why += "; " + w;
      throw NumericalError(why);
    }

    const auto ref = reference_pairs(c, grid, spectrum.size());
    std::vector<DiagnosticRow> rows;
    for (std::size_t i = 0; i < spectrum.size() && i < ref.size(); ++i) {
      const auto& m = spectrum.modes[i];
      rows.push_back({i + 1, std::abs(m.lambda_hat - ref[i].lambda),
                      aligned_distance(m.mode, ref[i].phi.cast<Complex>(), grid), m.rel_residual});
    }
    write_open_loop_diagnostics_csv(rows, out / "open_loop_diagnostics.csv");

    if (c.estimate_rho) {
      const Trajectory step = read_trajectory_binary(require(out, kStepResponse));
      write_rho_json(estimate_rho(drop_before(step, c.step_settle), grid, s, c.step_u0, c.rho_order),
                     out / kRho);
    }

    if (delay_mode) {
      if (!traj) throw InputError("delay mode needs open_loop.bin");
      const SamplingConfig few = SamplingConfig::equispaced(c.delay_mode_sensors, c.t_s, c.epsilon);
      const DataMatrix delayed = embedded_data(*traj, grid, few, spectrum.model.order(), c.delay_mode_delays);
      write_data_matrix_csv(delayed, out / "data_matrix_delay.csv");
      const KoopmanSpectrum dspec = krylov_dmd(delayed, grid);
      write_spectrum_json(dspec, nullptr, out / kDelaySpectrum);
      const Complex full = spectrum.modes.at(0).lambda_hat;
      const Complex few_l = dspec.modes.at(0).lambda_hat;
      write_json_file({{"sensors", c.delay_mode_sensors},
                       {"delays", c.delay_mode_delays},
                       {"lambda1_full", full.real()},
                       {"lambda1_delay", few_l.real()},
                       {"lambda1_delay_im", few_l.imag()},
                       {"difference", std::abs(full - few_l)}},
                      out / kDelayComparison);
    }
  });
}

void run_synthesize(const ExperimentConfig& c, const fs::path& out) {
  run_stage("synthesize", c, out, [&] {
    const SpatialGrid grid(c.grid_nodes);
    const KoopmanSpectrum spectrum = read_spectrum_json(require(out, kSpectrum), grid);
    if (c.assigned_modes > spectrum.size()) {
      throw InputError("synthesis.modes exceeds the identified spectrum");
    }
    const ModalModel model = build_modal_model(spectrum, c.assigned_modes, rho_hat(c, out));
    const Eigen::VectorXcd targets = target_vector(c);
    const AssignabilityReport report = assignability_check(model, targets);
    if (!report.ok()) throw InputError(report.summary());
    const ParameterSearch search = optimize_parameters(model, targets, c.optimizer);
    write_gain_json(parametric_gain(model, targets, search.P), &search, out / kGain);
  });
}

void run_certify(const ExperimentConfig& c, const fs::path& out) {
  run_stage("certify", c, out, [&] {
    const Loaded in = load_synthesis(c, out);
    const std::size_t n = in.model.order();
    const auto ref = reference_pairs(c, in.grid, n + c.n_tail);
    if (ref.size() <= n) throw InputError("grid too coarse for the requested tail");
    const ErrorBounds bounds = error_bounds(in.model, ref, c.plant.rho, in.grid);
    const RobustnessCertificate cert = certify(in.synth, in.model, bounds, ref[n].lambda);
    write_certificate_json(cert, in.synth, in.model, out / kCertificate);

    const std::vector<Eigenpair> tail(ref.begin() + static_cast<std::ptrdiff_t>(n), ref.end());
    const ClosedLoopEigenstructure cls = closed_loop_eigenstructure(in.synth, in.model, tail, in.grid);
    std::ofstream sums(out / "riesz_partial_sums.csv");
    sums << "m,partial_sum\n";
    for (Eigen::Index m = 0; m < cls.partial_sums.size(); ++m) {
      sums << m + 1 << ',' << format_double(cls.partial_sums[m]) << '\n';
    }
  });
}

void run_verify(const ExperimentConfig& c, const fs::path& out) {
  run_stage("verify", c, out, [&] {
    const Loaded in = load_synthesis(c, out);
    const std::size_t n = in.model.order();
    const StateProfile x0 = initial_state(out);
    const Eigen::MatrixXd modes = in.model.real_modes();

    const SpectrumReport report = verify_closed_loop_spectrum(c.plant, in.grid, in.synth, modes,
                                                              c.n_check);
    write_spectrum_report_csv(report, out / "closed_loop_spectrum.csv");

    // Closed-loop eigenvalue and adjoint-eigenvector errors against the
    // predicted structure (targets, then the untouched open-loop tail).
    const auto ref = reference_pairs(c, in.grid, n + c.n_tail);
    const std::vector<Eigenpair> tail(ref.begin() + static_cast<std::ptrdiff_t>(n), ref.end());
    const ClosedLoopEigenstructure cls = closed_loop_eigenstructure(in.synth, in.model, tail, in.grid);
    std::vector<ClosedLoopDiagnosticRow> rows;
    const std::size_t checked = std::min<std::size_t>(n + c.n_check, cls.psi.cols());
    for (std::size_t i = 0; i < checked; ++i) {
      Complex predicted, actual;
      if (i < n) {
        predicted = report.targets[i].target;
        actual = report.targets[i].closed_loop;
      } else {
        if (i - n >= report.tail.size()) break;
        predicted = report.tail[i - n].open_loop;
        actual = report.tail[i - n].closed_loop;
      }
      const Eigen::VectorXcd psi = closed_loop_adjoint_eigenvector(c.plant, in.grid, in.synth.K, modes, actual);
      rows.push_back({i + 1, std::abs(actual - predicted),
                      aligned_distance(cls.psi.col(static_cast<Eigen::Index>(i)), psi, in.grid)});
    }
    write_closed_loop_diagnostics_csv(rows, out / "closed_loop_diagnostics.csv");

    const std::size_t every = whole_periods(c.record_interval, c.closed_loop_dt, "verification.record_interval");
    const SimulationOptions opts{x0.t + c.closed_loop_t_final, c.closed_loop_dt, every};
    const Trajectory closed = closed_loop_simulate(c.plant, in.grid, x0, in.synth.K, modes, opts);
    write_trajectory_csv(closed, out / "closed_loop.csv");
    const Trajectory open = simulate(c.plant, in.grid, x0, zero_signal(), zero_signal(), opts);

    const DecayFit cl_fit = decay_fit(closed, in.grid, x0.t + c.decay_t_start);
    const DecayFit ol_fit = decay_fit(open, in.grid, x0.t + c.decay_t_start);
    const double ratio = in.grid.norm(closed.back().values) / in.grid.norm(x0.values);
    write_json_file({{"closed_loop", decay_json(cl_fit)},
                     {"open_loop", decay_json(ol_fit)},
                     {"norm_ratio", ratio},
                     {"max_target_error", report.max_target_error},
                     {"max_tail_relative", report.max_tail_relative},
                     {"partial_sum_final", cls.partial_sums[cls.partial_sums.size() - 1]}},
                    out / kVerification);
  });
}

std::vector<CheckResult> evaluate_acceptance(const ExperimentConfig& c, const fs::path& out) {
  std::vector<CheckResult> checks;
  const SpatialGrid grid(c.grid_nodes);

  const auto diag = read_open_loop_diagnostics_csv(require(out, "open_loop_diagnostics.csv"));
  const json spec = read_json_file(require(out, kSpectrum));
  const double lambda1 = spec.at("modes").at(0).at("lambda_hat_re").get<double>();
  bool head = diag.size() >= 7, tail = true;
  for (const auto& row : diag) {
    if (row.index <= 7) head = head && row.eigenvalue_error < 0.1;
    if (row.index >= 9) tail = tail && row.eigenvalue_error > 1.0;
  }
  checks.push_back(check("open-loop identification",
                         std::abs(lambda1 - kLambda1) <= 0.05 && head && tail,
                         "lambda1=" + num(lambda1) + " first7<0.1:" + (head ? "yes" : "no") +
                             " i>=9 >1:" + (tail ? "yes" : "no")));

  const double r = spec.at("residual_norm").get<double>();
  checks.push_back(check("residual magnitude", r >= 1e-8 && r <= 1e-5, "||r||=" + num(r)));

  if (c.estimate_rho) {
    const double rho = read_rho_json(require(out, kRho)).rho_hat;
    checks.push_back(check("rho estimate", std::abs(rho / c.plant.rho - 1.0) <= 0.02,
                           "rho_hat=" + num(rho) + " rho=" + num(c.plant.rho)));
  }

  const GainSynthesis synth = read_gain_json(require(out, kGain));
  const json ver = read_json_file(require(out, kVerification));
  const double kn = synth.gain_norm();
  const double te = ver.at("max_target_error").get<double>();
  const double tr = ver.at("max_tail_relative").get<double>();
  checks.push_back(check("synthesis", kn <= 25.0 && te < 2e-2 && tr < 1e-3,
                         "||K||=" + num(kn) + " target_err=" + num(te) + " tail_rel=" + num(tr)));

  const double a_cl = ver.at("closed_loop").at("alpha").get<double>();
  const double a_ol = ver.at("open_loop").at("alpha").get<double>();
  const double ratio = ver.at("norm_ratio").get<double>();
  checks.push_back(check("closed-loop decay", a_cl <= -6.5 && ratio < 1e-2 && a_ol >= 6.5,
                         "alpha_cl=" + num(a_cl) + " ratio=" + num(ratio) + " alpha_ol=" + num(a_ol)));

  const RobustnessCertificate cert = read_certificate_json(require(out, kCertificate));
  checks.push_back(check("certificate", cert.gamma < 0.0 && cert.pass,
                         "gamma=" + num(cert.gamma) + " alpha_hat=" + num(cert.alpha_hat)));

  if (fs::exists(out / kDelayComparison)) {
    const json d = read_json_file(out / kDelayComparison);
    const double diff = d.at("difference").get<double>();
    checks.push_back(check("delay coordinates", diff < 0.05, "|dlambda1|=" + num(diff)));
  }
  return checks;
}

std::vector<CheckResult> run_reproduce_example(const ExperimentConfig& c, const fs::path& out) {
  run_simulate(c, out);
  run_dmd(c, out, true);
  run_synthesize(c, out);
  run_certify(c, out);
  run_verify(c, out);
  std::vector<CheckResult> checks;
  run_stage("reproduce-example", c, out, [&] {
    checks = evaluate_acceptance(c, out);
    json list = json::array();
    bool all = true;
    for (const auto& ch : checks) {
      list.push_back({{"check", ch.name}, {"pass", ch.passed}, {"detail", ch.detail}});
      all = all && ch.passed;
    }
    write_json_file({{"pass", all}, {"checks", list}}, out / "acceptance.json");
  });
  return checks;
}

}  // namespace koopctl
