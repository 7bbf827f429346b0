#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "koopctl/config.hpp"
#include "koopctl/eigenassign.hpp"

namespace koopctl {

// File-based experiment stages. Each stage reads the artifacts of earlier
// stages from `out`, writes its own, echoes the configuration to config.toml
// and refreshes manifest.json. A failing stage rethrows with its name
// prefixed to the message; whatever it wrote before failing stays on disk.
//
//   simulate    initial_state.csv, open_loop.bin, step_response.bin
//   dmd         data_matrix.csv, spectrum.json, rho_estimate.json,
//               open_loop_diagnostics.csv (+ data_matrix_delay.csv,
//               spectrum_delay.json, delay_comparison.json in delay mode)
//   synthesize  gain.json
//   certify     certificate.json, riesz_partial_sums.csv
//   verify      closed_loop_spectrum.csv, closed_loop_diagnostics.csv,
//               closed_loop.csv, verification.json
void run_simulate(const ExperimentConfig& config, const std::filesystem::path& out);
// Uses open_loop.bin when present, otherwise an existing data_matrix.csv.
void run_dmd(const ExperimentConfig& config, const std::filesystem::path& out,
             bool delay_mode = false);
void run_synthesize(const ExperimentConfig& config, const std::filesystem::path& out);
void run_certify(const ExperimentConfig& config, const std::filesystem::path& out);
void run_verify(const ExperimentConfig& config, const std::filesystem::path& out);

// Every stage in order (dmd always in delay mode), then the acceptance
// thresholds of the diffusion-reaction example evaluated on the bundle and
// written to acceptance.json.
std::vector<CheckResult> run_reproduce_example(const ExperimentConfig& config,
                                               const std::filesystem::path& out);

// Threshold checks on an existing bundle.
std::vector<CheckResult> evaluate_acceptance(const ExperimentConfig& config,
                                             const std::filesystem::path& out);

// manifest.json: every regular file in `out` (itself excluded) with its byte
// size, sorted by name.
void write_manifest(const std::filesystem::path& out);

}  // namespace koopctl
