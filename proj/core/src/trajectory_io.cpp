#include "koopctl/trajectory_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/text_format.hpp"

namespace koopctl {

namespace {

constexpr char kMagic[8] = {'K', 'C', 'T', 'R', 'A', 'J', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary trajectory format assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("trajectory: truncated file");
  return v;
}

double get_f64(std::istream& in) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("trajectory: truncated file");
  return v;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  traj.validate();
  const Eigen::Index n = traj.states.front().size();
  out << "t,u1,u2";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.t[k]) << ',' << format_double(traj.u1[k]) << ','
        << format_double(traj.u2[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(traj.states[k][i]);
    out << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_trajectory_csv(traj, out);
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory csv: missing header");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "t" || header[1] != "u1" || header[2] != "u2") {
    throw InputError("trajectory csv: header must start with t,u1,u2");
  }
  const std::size_t nodes = header.size() - 3;
  Trajectory traj;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    const std::string where = "trajectory csv line " + std::to_string(line_no);
    if (fields.size() != nodes + 3) throw InputError(where + ": wrong number of columns");
    traj.t.push_back(parse_double(fields[0], where));
    traj.u1.push_back(parse_double(fields[1], where));
    traj.u2.push_back(parse_double(fields[2], where));
    Eigen::VectorXd x(static_cast<Eigen::Index>(nodes));
    for (std::size_t i = 0; i < nodes; ++i) x[static_cast<Eigen::Index>(i)] = parse_double(fields[i + 3], where);
    traj.states.push_back(std::move(x));
  }
  try {
    traj.validate();
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("trajectory csv: ") + e.what());
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_trajectory_csv(in);
}

void write_trajectory_binary(const Trajectory& traj, const std::filesystem::path& path) {
  traj.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  const std::size_t records = traj.size();
  const auto nodes = static_cast<std::size_t>(traj.states.front().size());
  out.write(kMagic, sizeof kMagic);
  put_u64(out, records);
  put_u64(out, nodes);
  for (double v : traj.t) put_f64(out, v);
  for (double v : traj.u1) put_f64(out, v);
  for (double v : traj.u2) put_f64(out, v);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t k = 0; k < records; ++k) put_f64(out, traj.states[k][static_cast<Eigen::Index>(i)]);
  }
}

Trajectory read_trajectory_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InputError("trajectory: bad magic in " + path.string());
  }
  const std::uint64_t records = get_u64(in);
  const std::uint64_t nodes = get_u64(in);
  if (records == 0 || nodes == 0 || records > (1ULL << 32) || nodes > (1ULL << 32)) {
    throw InputError("trajectory: implausible header in " + path.string());
  }
  Trajectory traj;
  auto column = [&](std::vector<double>& dst) {
    dst.resize(records);
    for (auto& v : dst) v = get_f64(in);
  };
  column(traj.t);
  column(traj.u1);
  column(traj.u2);
  traj.states.assign(records, Eigen::VectorXd(static_cast<Eigen::Index>(nodes)));
  for (std::uint64_t i = 0; i < nodes; ++i) {
    for (std::uint64_t k = 0; k < records; ++k) traj.states[k][static_cast<Eigen::Index>(i)] = get_f64(in);
  }
  try {
    traj.validate();
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("trajectory: ") + e.what());
  }
  return traj;
}

}  // namespace koopctl
