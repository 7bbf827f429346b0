#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "koopctl/grid.hpp"
#include "koopctl/simulate.hpp"

namespace koopctl {

// Sensor layout: y_i = <x, c_i> with c_i the unit-mass indicator on
// [z_i - eps, z_i + eps], or point evaluation at z_i when eps == 0.
struct SamplingConfig {
  std::vector<double> centers;
  double epsilon = 0.0;
  double t_s = 0.0;

  std::size_t channels() const { return centers.size(); }
  void validate() const;

  // M equispaced interior sensors z_i = i / (M + 1).
  static SamplingConfig equispaced(std::size_t m, double t_s, double epsilon = 0.0);
};

// Linear map from grid states to sensor outputs, precomputed as a sparse
// M x N matrix.
class Sampler {
 public:
  Sampler(const SpatialGrid& grid, const SamplingConfig& config);

  Eigen::VectorXd operator()(const Eigen::VectorXd& state) const { return matrix_ * state; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return matrix_; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_;
};

Eigen::VectorXd sample_output(const StateProfile& state, const SpatialGrid& grid,
                              const SamplingConfig& config);

// Snapshot matrix [y_0 ... y_n]; after delay embedding with d delays each
// column stacks d consecutive outputs and there are M*d rows.
struct DataMatrix {
  Eigen::MatrixXd D;
  SamplingConfig config;
  std::size_t delays = 1;
  // False when the trajectory window carried nonzero inputs.
  bool open_loop = true;

  std::size_t transitions() const { return static_cast<std::size_t>(D.cols()) - 1; }
  std::size_t channels() const { return config.channels(); }
  void validate() const;
};

// Samples the trajectory at t_0 + k t_s, k = 0..n. t_s must be an integer
// multiple of the record spacing.
DataMatrix build_data_matrix(const Trajectory& traj, const SpatialGrid& grid,
                             const SamplingConfig& config, std::size_t n);

// Hankel lift: new column k = [col_k; col_{k+1}; ...; col_{k+d-1}].
DataMatrix delay_embed(const DataMatrix& data, std::size_t d);

// CSV layout: an optional "# t_s=<v> epsilon=<v> delays=<d> open_loop=<0|1>"
// line, a header row with the M sensor positions, one row per channel.
void write_data_matrix_csv(const DataMatrix& data, std::ostream& out);
void write_data_matrix_csv(const DataMatrix& data, const std::filesystem::path& path);
DataMatrix read_data_matrix_csv(std::istream& in);
DataMatrix read_data_matrix_csv(const std::filesystem::path& path);

}  // namespace koopctl
