#include "psl/core/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace psl::core {
namespace {

std::string join(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

Vec parse_vec(const std::string& field) {
  std::vector<double> vals;
  std::stringstream ss(field);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) vals.push_back(std::stod(tok));
  }
  Vec v(static_cast<long>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<long>(i)] = vals[i];
  return v;
}

}  // namespace

void write_trajectories(std::ostream& os, const std::vector<Trajectory>& trajs) {
  os << "# task_id\tstep\tstate\taction\treward\tnext_state\tdone\n";
  os << std::setprecision(17);
  for (const Trajectory& traj : trajs) {
    int step = 0;
    for (const Transition& t : traj.transitions) {
      os << traj.task_id << '\t' << step++ << '\t' << join(t.state) << '\t'
         << join(t.action) << '\t' << t.reward << '\t' << join(t.next_state) << '\t'
         << (t.done ? 1 : 0) << '\n';
    }
  }
}

void write_trajectories_file(const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_trajectories(os, trajs);
}

std::vector<Trajectory> read_trajectories(std::istream& is) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string task_id, step_s, state_s, action_s, reward_s, next_s, done_s;
    if (!std::getline(ss, task_id, '\t') || !std::getline(ss, step_s, '\t') ||
        !std::getline(ss, state_s, '\t') || !std::getline(ss, action_s, '\t') ||
        !std::getline(ss, reward_s, '\t') || !std::getline(ss, next_s, '\t') ||
        !std::getline(ss, done_s, '\t'))
      throw std::runtime_error("malformed trajectory line: " + line);
    Transition t;
    t.state = parse_vec(state_s);
    t.action = parse_vec(action_s);
    t.reward = std::stod(reward_s);
    t.next_state = parse_vec(next_s);
    t.done = std::stoi(done_s) != 0;
    if (std::stoi(step_s) == 0 || out.empty()) {
      out.emplace_back();
      out.back().task_id = task_id;
    }
    out.back().transitions.push_back(std::move(t));
  }
  return out;
}

std::vector<Trajectory> read_trajectories_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_trajectories(is);
}

}  // namespace psl::core
