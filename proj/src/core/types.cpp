#include "psl/core/types.hpp"

#include <cmath>

namespace psl::core {

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Door: return "door";
    case EnvKind::Wind: return "wind";
    case EnvKind::GatherOne: return "gather-one";
    case EnvKind::GatherTwo: return "gather-two";
    case EnvKind::Block: return "block";
  }
  throw std::invalid_argument("unknown EnvKind");
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "door") return EnvKind::Door;
  if (name == "wind") return EnvKind::Wind;
  if (name == "gather-one") return EnvKind::GatherOne;
  if (name == "gather-two") return EnvKind::GatherTwo;
  if (name == "block") return EnvKind::Block;
  throw std::invalid_argument("unknown env kind: " + name);
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.empty()) throw std::invalid_argument("trajectory is empty");
  const auto n = traj.transitions.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = traj.transitions[i];
    if (t.state.size() != t.next_state.size())
      throw std::invalid_argument("state/next_state dimension mismatch");
    if (!std::isfinite(t.reward))
      throw std::invalid_argument("non-finite reward");
    for (int j = 0; j < t.action.size(); ++j) {
      if (t.action[j] < -1.0 - 1e-12 || t.action[j] > 1.0 + 1e-12)
        throw std::invalid_argument("action component outside [-1, 1]");
    }
    if (t.done && i + 1 != n)
      throw std::invalid_argument("done set before final transition");
    if (i + 1 < n) {
      const Transition& next = traj.transitions[i + 1];
      if ((t.next_state - next.state).lpNorm<Eigen::Infinity>() > 1e-9)
        throw std::invalid_argument("adjacent transitions do not chain");
    }
  }
}

Vec state_projection(const Vec& state, EnvKind kind, bool wind_full_state) {
  if (state.size() == 2) return state;
  if (state.size() != kFullStateDim)
    throw std::invalid_argument("state dimension " + std::to_string(state.size()) +
                                " does not match env layout");
  if (kind == EnvKind::Wind && wind_full_state) return state;
  return state.head(2);
}

int projected_state_dim(EnvKind kind, bool wind_full_state) {
  if (kind == EnvKind::Wind && wind_full_state) return kFullStateDim;
  return 2;
}

}  // namespace psl::core
