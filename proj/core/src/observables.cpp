#include "koopctl/observables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/text_format.hpp"

namespace koopctl {

void SamplingConfig::validate() const {
  if (centers.empty()) throw InvalidArgument("sampling: no sensors");
  if (!(t_s > 0.0)) throw InvalidArgument("sampling: t_s must be positive");
  if (!(epsilon >= 0.0)) throw InvalidArgument("sampling: epsilon must be >= 0");
  std::vector<double> sorted = centers;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double z = sorted[i];
    if (!(z - epsilon > 0.0) || !(z + epsilon < 1.0)) {
      throw InvalidArgument("sampling: sensor support around z = " + format_double(z) +
                            " leaves (0, 1)");
    }
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      throw InvalidArgument("sampling: duplicate sensor at z = " + format_double(z));
    }
  }
}

SamplingConfig SamplingConfig::equispaced(std::size_t m, double t_s, double epsilon) {
  SamplingConfig c;
  c.t_s = t_s;
  c.epsilon = epsilon;
  c.centers.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    c.centers[i] = static_cast<double>(i + 1) / static_cast<double>(m + 1);
  }
  return c;
}

Sampler::Sampler(const SpatialGrid& grid, const SamplingConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double h = grid.spacing();
  std::vector<Eigen::Triplet<double>> entries;

  // Cell index j with z in [z_j, z_{j+1}] and the local coordinate in it.
  auto locate = [&](double z) {
    auto j = static_cast<Eigen::Index>(std::floor(z / h));
    j = std::clamp<Eigen::Index>(j, 0, n - 2);
    return std::pair{j, (z - grid.node(static_cast<std::size_t>(j))) / h};
  };

  for (std::size_t i = 0; i < config.centers.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double zc = config.centers[i];
    if (config.epsilon == 0.0) {
      const auto [j, theta] = locate(zc);
      entries.emplace_back(row, j, 1.0 - theta);
      entries.emplace_back(row, j + 1, theta);
      continue;
    }
    // Exact integral of the piecewise-linear interpolant over the support.
    const double lo = zc - config.epsilon;
    const double hi = zc + config.epsilon;
    const double mass = 1.0 / (2.0 * config.epsilon);
    const Eigen::Index first = locate(lo).first;
    const Eigen::Index last = locate(hi).first;
    for (Eigen::Index j = first; j <= last; ++j) {
      const double a = std::max(lo, grid.node(static_cast<std::size_t>(j)));
      const double b = std::min(hi, grid.node(static_cast<std::size_t>(j + 1)));
      if (!(b > a)) continue;
      const double ta = (a - grid.node(static_cast<std::size_t>(j))) / h;
      const double tb = (b - grid.node(static_cast<std::size_t>(j))) / h;
      const double len = 0.5 * (b - a) * mass;
      entries.emplace_back(row, j, len * ((1.0 - ta) + (1.0 - tb)));
      entries.emplace_back(row, j + 1, len * (ta + tb));
    }
  }
  matrix_.resize(static_cast<Eigen::Index>(config.centers.size()), n);
  matrix_.setFromTriplets(entries.begin(), entries.end());
}

Eigen::VectorXd sample_output(const StateProfile& state, const SpatialGrid& grid,
                              const SamplingConfig& config) {
  if (static_cast<std::size_t>(state.values.size()) != grid.size()) {
    throw InvalidArgument("sample_output: state does not match the grid");
  }
  return Sampler(grid, config)(state.values);
}

void DataMatrix::validate() const {
  if (D.cols() < 2) throw InvalidArgument("data matrix needs at least two snapshots");
  if (D.rows() != static_cast<Eigen::Index>(config.channels() * delays)) {
    throw InvalidArgument("data matrix row count does not match channels x delays");
  }
  if (!D.allFinite()) throw InvalidArgument("data matrix contains non-finite entries");
}

DataMatrix build_data_matrix(const Trajectory& traj, const SpatialGrid& grid,
                             const SamplingConfig& config, std::size_t n) {
  traj.validate();
  config.validate();
  if (n == 0) throw InvalidArgument("build_data_matrix: n must be >= 1");
  const double step = traj.record_step();
  if (!(step > 0.0)) throw InvalidArgument("build_data_matrix: trajectory has a single record");
  const double ratio = config.t_s / step;
  const double stride_f = std::round(ratio);
  if (stride_f < 1.0 || std::abs(ratio - stride_f) > 1e-12 * std::max(1.0, stride_f)) {
    throw InvalidArgument("build_data_matrix: t_s = " + format_double(config.t_s) +
                          " is not an integer multiple of the record step " + format_double(step));
  }
  const auto stride = static_cast<std::size_t>(stride_f);
  if (n * stride >= traj.size()) {
    throw InvalidArgument("build_data_matrix: trajectory too short for " + std::to_string(n) +
                          " transitions");
  }
  const Sampler sampler(grid, config);
  DataMatrix data;
  data.config = config;
  data.D.resize(static_cast<Eigen::Index>(config.channels()), static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t idx = k * stride;
    data.D.col(static_cast<Eigen::Index>(k)) = sampler(traj.states[idx]);
  }
  for (std::size_t idx = 0; idx <= n * stride; ++idx) {
    if (traj.u1[idx] != 0.0 || traj.u2[idx] != 0.0) data.open_loop = false;
  }
  return data;
}

DataMatrix delay_embed(const DataMatrix& data, std::size_t d) {
  data.validate();
  if (d == 0) throw InvalidArgument("delay_embed: d must be >= 1");
  const Eigen::Index cols = data.D.cols();
  if (static_cast<Eigen::Index>(d) + 1 > cols) {
    throw InvalidArgument("delay_embed: " + std::to_string(d) + " delays need at least " +
                          std::to_string(d + 1) + " snapshots, have " + std::to_string(cols));
  }
  const Eigen::Index rows = data.D.rows();
  const Eigen::Index new_cols = cols - static_cast<Eigen::Index>(d) + 1;
  DataMatrix out;
  out.config = data.config;
  out.delays = data.delays * d;
  out.open_loop = data.open_loop;
  out.D.resize(rows * static_cast<Eigen::Index>(d), new_cols);
  for (Eigen::Index k = 0; k < new_cols; ++k) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
      out.D.block(j * rows, k, rows, 1) = data.D.col(k + j);
    }
  }
  return out;
}

void write_data_matrix_csv(const DataMatrix& data, std::ostream& out) {
  data.validate();
  out << "# t_s=" << format_double(data.config.t_s)
      << " epsilon=" << format_double(data.config.epsilon) << " delays=" << data.delays
      << " open_loop=" << (data.open_loop ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < data.config.centers.size(); ++i) {
    out << (i ? "," : "") << format_double(data.config.centers[i]);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < data.D.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.D.cols(); ++c) {
      out << (c ? "," : "") << format_double(data.D(r, c));
    }
    out << '\n';
  }
}

void write_data_matrix_csv(const DataMatrix& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_data_matrix_csv(data, out);
}

DataMatrix read_data_matrix_csv(std::istream& in) {
  DataMatrix data;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "data matrix csv line " + std::to_string(line_no);
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string item;
      while (meta >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = item.substr(0, eq);
        const double value = parse_double(item.substr(eq + 1), where);
        if (key == "t_s") data.config.t_s = value;
        else if (key == "epsilon") data.config.epsilon = value;
        else if (key == "delays") data.delays = static_cast<std::size_t>(value);
        else if (key == "open_loop") data.open_loop = value != 0.0;
      }
      continue;
    }
    std::vector<double> values;
    for (const auto& f : split_csv(line)) values.push_back(parse_double(f, where));
    if (!have_header) {
      data.config.centers = std::move(values);
      have_header = true;
    } else {
      if (!rows.empty() && values.size() != rows.front().size()) {
        throw InputError(where + ": row length differs from the first channel");
      }
      rows.push_back(std::move(values));
    }
  }
  if (!have_header || rows.empty()) throw InputError("data matrix csv: no sensor header or channels");
  data.D.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      data.D(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (data.delays == 0) throw InputError("data matrix csv: delays must be >= 1");
  try {
    data.config.validate();
    data.validate();
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("data matrix csv: ") + e.what());
  }
  return data;
}

DataMatrix read_data_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_data_matrix_csv(in);
}

}  // namespace koopctl
