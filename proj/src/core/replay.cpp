#include "psl/core/replay.hpp"

#include <numeric>

namespace psl::core {

TaskReplayBuffer::TaskReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("capacity must be positive");
}

void TaskReplayBuffer::insert(const Trajectory& traj) {
  if (traj.empty()) throw std::invalid_argument("cannot insert empty trajectory");
  if (traj.size() > capacity_)
    throw std::invalid_argument("trajectory longer than buffer capacity");
  while (transitions_.size() + traj.size() > capacity_) {
    const Record& oldest = index_.front();
    transitions_.erase(transitions_.begin(),
                       transitions_.begin() + static_cast<long>(oldest.length));
    index_.pop_front();
  }
  for (const Transition& t : traj.transitions) transitions_.push_back(t);
  index_.push_back({traj.size(), traj.success, traj.task_id});
}

std::vector<Transition> TaskReplayBuffer::sample_transitions(std::size_t n, Rng& rng) const {
  if (transitions_.empty()) throw std::runtime_error("sampling from empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, transitions_.size() - 1);
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(transitions_[pick(rng)]);
  return out;
}

std::size_t TaskReplayBuffer::num_success_trajectories() const {
  std::size_t c = 0;
  for (const Record& r : index_) c += r.success ? 1 : 0;
  return c;
}

Trajectory TaskReplayBuffer::materialize(std::size_t record_idx) const {
  std::size_t start = 0;
  for (std::size_t i = 0; i < record_idx; ++i) start += index_[i].length;
  const Record& rec = index_[record_idx];
  Trajectory traj;
  traj.success = rec.success;
  traj.task_id = rec.task_id;
  traj.transitions.assign(transitions_.begin() + static_cast<long>(start),
                          transitions_.begin() + static_cast<long>(start + rec.length));
  return traj;
}

std::optional<Trajectory> TaskReplayBuffer::sample_trajectory(bool success_only,
                                                              Rng& rng) const {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < index_.size(); ++i)
    if (!success_only || index_[i].success) eligible.push_back(i);
  if (eligible.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return materialize(eligible[pick(rng)]);
}

}  // namespace psl::core
