#include "fixtures.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>

namespace koopctl::fixture {

StateProfile pulse_state(const ParabolicPlant& plant, const SpatialGrid& grid, double amplitude,
                         double duration) {
  const double dt = kTs / static_cast<double>(kSubsteps);
  const StateProfile rest{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size())), -duration};
  const std::size_t steps = step_count(-duration, 0.0, dt);
  const Trajectory pulse = simulate(plant, grid, rest, [amplitude](double t) { return t < 0.0 ? amplitude : 0.0; },
                                    zero_signal(), {0.0, dt, steps});
  return pulse.back();
}

Trajectory step_response(const ParabolicPlant& plant, const SpatialGrid& grid, double u0,
                         double settle, std::size_t periods) {
  const double dt = kTs / static_cast<double>(kSubsteps);
  const StateProfile rest{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size())), 0.0};
  const std::size_t skip = static_cast<std::size_t>(std::lround(settle / kTs));
  const Trajectory full = simulate(plant, grid, rest, zero_signal(), [u0](double) { return u0; },
                                   {static_cast<double>(skip + periods) * kTs, dt, kSubsteps});
  Trajectory out;
  for (std::size_t k = skip; k < full.size(); ++k) {
    out.t.push_back(full.t[k]);
    out.states.push_back(full.states[k]);
    out.u1.push_back(full.u1[k]);
    out.u2.push_back(full.u2[k]);
  }
  return out;
}

DataMatrix modal_data(const std::vector<Eigenpair>& pairs, const std::vector<double>& coeffs,
                      const SpatialGrid& grid, const SamplingConfig& config, std::size_t n) {
  const Sampler sampler(grid, config);
  DataMatrix data;
  data.config = config;
  data.D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(config.channels()), static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const Eigen::VectorXd y = sampler(pairs[i].phi);
    for (std::size_t k = 0; k <= n; ++k) {
      data.D.col(static_cast<Eigen::Index>(k)) +=
          coeffs[i] * std::exp(pairs[i].lambda * config.t_s * static_cast<double>(k)) * y;
    }
  }
  return data;
}

const ExampleRun& example_run() {
  static const ExampleRun run = [] {
    ExampleRun r;
    r.plant = ParabolicPlant::diffusion_reaction_example();
    r.reference = eigensolve_reference(assemble_operator(r.plant, r.grid), r.grid, 70);
    r.x0 = pulse_state(r.plant, r.grid);
    r.traj = simulate(r.plant, r.grid, r.x0, zero_signal(), zero_signal(),
                      {13 * kTs, kTs / static_cast<double>(kSubsteps), kSubsteps});
    r.sampling = SamplingConfig::equispaced(500, kTs);
    r.data = build_data_matrix(r.traj, r.grid, r.sampling, 11);
    r.spectrum = krylov_dmd(r.data, r.grid);
    r.model = build_modal_model(r.spectrum, 3, 1.0);
    r.targets.resize(3);
    r.targets << -7.0034, -10.771, -52.729;
    r.search = optimize_parameters(r.model, r.targets, {});
    r.synth = parametric_gain(r.model, r.targets, r.search.P);
    return r;
  }();
  return run;
}

Eigen::VectorXcd Gen::hurwitz_targets(std::size_t n, const Eigen::VectorXcd& avoid, double gap) {
  auto clear = [&](std::complex<double> c, const std::vector<std::complex<double>>& taken) {
    for (const auto& t : taken) {
      if (std::abs(t - c) < gap) return false;
    }
    for (Eigen::Index i = 0; i < avoid.size(); ++i) {
      if (std::abs(avoid[i] - c) < gap) return false;
    }
    return true;
  };
  std::vector<std::complex<double>> out;
  const bool pair = n >= 2 && coin();
  if (pair) {
    std::complex<double> c;
    do {
      c = {uniform(-60.0, -1.0), uniform(1.0, 20.0)};
    } while (!clear(c, out) || !clear(std::conj(c), out));
    out.push_back(c);
    out.push_back(std::conj(c));
  }
  while (out.size() < n) {
    const std::complex<double> c{uniform(-80.0, -0.5), 0.0};
    if (clear(c, out)) out.push_back(c);
  }
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = out[i];
  return v;
}

Eigen::MatrixXd Gen::hurwitz_matrix(Eigen::Index n) {
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(matrix(n, n, -1.0, 1.0)).householderQ();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i, i) = uniform(-5.0, -0.2);
    for (Eigen::Index j = i + 1; j < n; ++j) t(i, j) = uniform(-1.0, 1.0);
  }
  return q * t * q.transpose();
}

Eigen::MatrixXcd Gen::parameters(const Eigen::VectorXcd& targets, double box) {
  const Eigen::Index n = targets.size();
  Eigen::MatrixXcd p(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (targets[i].imag() == 0.0) {
      p.col(i) = vector(2, -box, box).cast<std::complex<double>>();
    } else if (targets[i].imag() > 0.0) {
      for (int r = 0; r < 2; ++r) p(r, i) = {uniform(-box, box), uniform(-box, box)};
    }
  }
  // Conjugate partners copy the conjugate column of their positive-imag twin.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (targets[i].imag() >= 0.0) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(targets[j] - std::conj(targets[i])) < 1e-12) p.col(i) = p.col(j).conjugate();
    }
  }
  return p;
}

}  // namespace koopctl::fixture
