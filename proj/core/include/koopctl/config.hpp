#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "koopctl/eigenassign.hpp"
#include "koopctl/plant.hpp"

namespace koopctl {

// Every field defaults to the diffusion-reaction example, so an empty
// configuration file reproduces it.
struct ExperimentConfig {
  ParabolicPlant plant = ParabolicPlant::diffusion_reaction_example();
  std::size_t grid_nodes = 2001;

  // Sampling: M equispaced sensors unless explicit centers are given.
  std::size_t sensors = 500;
  std::vector<double> centers;
  double epsilon = 0.0;
  double t_s = 0.004;
  std::size_t delays = 1;
  std::size_t substeps = 100;  // integrator steps per sampling period

  // Initial condition: x = 0 at t = -duration, u1 = amplitude until t = 0.
  double pulse_amplitude = 10.0;
  double pulse_duration = 0.1;

  // Krylov-DMD order; nullopt selects it from the residual.
  std::optional<std::size_t> order = 11;
  double order_tol = 1e-8;
  std::size_t order_max = 12;

  // Diffusion estimate from a step response (u2 = u0 from t = 0, data
  // window starting at t = settle). When disabled plant.rho is used.
  bool estimate_rho = true;
  double step_u0 = 1.0;
  double step_settle = 0.1;
  std::size_t rho_order = 11;

  std::size_t assigned_modes = 3;
  std::vector<std::complex<double>> targets{-7.0034, -10.771, -52.729};
  OptimizerOptions optimizer;

  std::size_t n_tail = 50;
  std::size_t n_check = 10;
  double closed_loop_t_final = 1.0;
  double closed_loop_dt = 1e-4;
  double record_interval = 0.01;
  double decay_t_start = 0.2;

  // Measurement-poor variant: few sensors with delay coordinates.
  std::size_t delay_mode_sensors = 5;
  std::size_t delay_mode_delays = 3;

  std::filesystem::path output_dir = "out";

  // Throws InputError describing the first inconsistent field.
  void validate() const;
};

ExperimentConfig example_config();

// TOML parsing. Unknown keys, wrong types and syntax errors raise InputError
// with "<source>:<line>:" diagnostics. Relative file references resolve
// against `base_dir`.
ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "config",
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical TOML rendering of every field (round-trips through parse_config).
// Without `include_output` the [output] table is left out, so the text does
// not depend on where artifacts are written.
std::string config_to_toml(const ExperimentConfig& config, bool include_output = true);

}  // namespace koopctl
