#pragma once

#include <deque>
#include <optional>
#include <random>

#include "psl/core/types.hpp"

namespace psl::core {

using Rng = std::mt19937_64;

// Per-task replay storage over whole trajectories. Eviction is
// whole-trajectory FIFO so trajectory sampling stays well-defined.
class TaskReplayBuffer {
 public:
  explicit TaskReplayBuffer(std::size_t capacity = 100000);

  // Appends all transitions and records the trajectory; evicts oldest
  // whole trajectories until size fits. Throws if the trajectory is
  // empty or longer than capacity.
  void insert(const Trajectory& traj);

  // n transitions drawn uniformly with replacement. Throws on empty buffer.
  std::vector<Transition> sample_transitions(std::size_t n, Rng& rng) const;

  // One stored trajectory chosen uniformly among eligible records.
  // Returns nullopt when no eligible trajectory exists ("not ready").
  std::optional<Trajectory> sample_trajectory(bool success_only, Rng& rng) const;

  std::size_t size() const { return transitions_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t num_trajectories() const { return index_.size(); }
  std::size_t num_success_trajectories() const;
  bool empty() const { return transitions_.empty(); }

 private:
  struct Record {
    std::size_t length = 0;
    bool success = false;
    std::string task_id;
  };

  Trajectory materialize(std::size_t record_idx) const;

  std::size_t capacity_;
  std::deque<Transition> transitions_;
  std::deque<Record> index_;  // records address contiguous runs, oldest first
};

}  // namespace psl::core
