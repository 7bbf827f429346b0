#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "koopctl/eigenassign.hpp"
#include "koopctl/krylov_dmd.hpp"
#include "koopctl/stability.hpp"

namespace koopctl {

// JSON artifacts. Readers throw InputError on missing files or fields.

// Per mode: lambda_hat_re/im, mu_re/im, rel_residual, amplitude_re/im and
// mode_samples (+ mode_samples_im) over all channels. Modes on the grid are
// rebuilt from the samples on reading.
void write_spectrum_json(const KoopmanSpectrum& spectrum, const OrderSelection* selection,
                         const std::filesystem::path& path);
KoopmanSpectrum read_spectrum_json(const std::filesystem::path& path, const SpatialGrid& grid);

void write_rho_json(const RhoEstimate& estimate, const std::filesystem::path& path);
RhoEstimate read_rho_json(const std::filesystem::path& path);

// {targets[], P[][], K[][], achieved_spectrum[], cond_V} with complex
// quantities split into _re / _im parts.
void write_gain_json(const GainSynthesis& synth, const ParameterSearch* search,
                     const std::filesystem::path& path);
GainSynthesis read_gain_json(const std::filesystem::path& path);

void write_certificate_json(const RobustnessCertificate& cert, const GainSynthesis& synth,
                            const ModalModel& model, const std::filesystem::path& path);
RobustnessCertificate read_certificate_json(const std::filesystem::path& path);

// One row per identified mode against the reference oracle.
struct DiagnosticRow {
  std::size_t index = 0;
  double eigenvalue_error = 0.0;
  double mode_error = 0.0;
  double rel_residual = 0.0;
};

void write_open_loop_diagnostics_csv(const std::vector<DiagnosticRow>& rows,
                                     const std::filesystem::path& path);
std::vector<DiagnosticRow> read_open_loop_diagnostics_csv(const std::filesystem::path& path);

// Closed-loop eigenvalue and adjoint eigenvector errors per assigned target.
struct ClosedLoopDiagnosticRow {
  std::size_t index = 0;
  double eigenvalue_error = 0.0;
  double eigenvector_error = 0.0;
};

void write_closed_loop_diagnostics_csv(const std::vector<ClosedLoopDiagnosticRow>& rows,
                                       const std::filesystem::path& path);

// index, open_loop, closed_loop, displacement: the assigned eigenvalues
// first (displaced on purpose), then the tail.
void write_spectrum_report_csv(const SpectrumReport& report, const std::filesystem::path& path);

}  // namespace koopctl
