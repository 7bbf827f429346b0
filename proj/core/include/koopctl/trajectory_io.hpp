#pragma once

#include <filesystem>
#include <iosfwd>

#include "koopctl/simulate.hpp"

namespace koopctl {

// CSV: header "t,u1,u2,x0,...,x{N-1}", then one row per record. Values are
// written with 17 significant digits so a round trip is lossless.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

// Columnar binary: magic "KCTRAJ01", uint64 record count, uint64 node count,
// then the t, u1, u2 columns and one column per node, all little-endian
// float64.
void write_trajectory_binary(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_binary(const std::filesystem::path& path);

}  // namespace koopctl
