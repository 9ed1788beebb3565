#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "psl/core/types.hpp"

namespace psl::core {

// Line-delimited trajectory export. One transition per line:
//   task_id <TAB> step <TAB> state <TAB> action <TAB> reward <TAB> next_state <TAB> done
// Vector fields are comma-joined decimal numbers. Lines starting with '#'
// are comments. Trajectory boundaries are step counters restarting at 0.
void write_trajectories(std::ostream& os, const std::vector<Trajectory>& trajs);
void write_trajectories_file(const std::string& path, const std::vector<Trajectory>& trajs);

std::vector<Trajectory> read_trajectories(std::istream& is);
std::vector<Trajectory> read_trajectories_file(const std::string& path);

}  // namespace psl::core
