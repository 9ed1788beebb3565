#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace psl::core {

using Vec = Eigen::VectorXd;

enum class EnvKind { Door, Wind, GatherOne, GatherTwo, Block };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

// One primitive-step experience tuple.
struct Transition {
  Vec state;
  Vec action;  // components in [-1, 1]
  double reward = 0.0;
  Vec next_state;
  bool done = false;
};

// Ordered transitions from one episode or one skill execution.
// Adjacent transitions chain: next_state of i equals state of i+1.
struct Trajectory {
  std::vector<Transition> transitions;
  std::string task_id;
  bool success = false;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
};

// Throws std::invalid_argument if chaining, action bounds, or the
// done-only-at-end invariant is violated.
void validate_trajectory(const Trajectory& traj);

// One HiP-MDP instance: environment family plus its hidden parameter.
struct TaskSpec {
  EnvKind kind = EnvKind::Door;
  Vec hidden_param;  // theta; never exposed in observations
  int horizon = 40;
};

// (k, z_k) pair selected by the high/mid-level policies.
struct ParameterizedAction {
  int skill_label = 0;
  Vec skill_param;  // zero-length allowed for discrete-only skills
};

// Full observation layout shared by every point-mass kind:
// (x, y relative to segment midline, stage, vx, vy).
inline constexpr int kFullStateDim = 5;

// Position sub-vector used for trajectory encoding and DTW.
// 2-dim inputs pass through unchanged; Wind may be configured to keep
// the full state.
Vec state_projection(const Vec& state, EnvKind kind, bool wind_full_state = false);

int projected_state_dim(EnvKind kind, bool wind_full_state = false);

}  // namespace psl::core
