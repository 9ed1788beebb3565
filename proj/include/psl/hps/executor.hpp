#pragma once

#include "psl/envs/course.hpp"
#include "psl/hps/agent.hpp"

namespace psl::hps {

struct ExecutionResult {
  double reward_sum = 0.0;  // raw env reward over the execution
  Vec next_state;           // high-level observation after the last step
  bool done = false;
  bool success = false;
  bool barrier_crossed = false;
  core::Trajectory trajectory;  // primitive-level record
};

// Runs the frozen low-level policy pi_k(a|s, z) for up to T_skill primitive
// steps, returning control early when the episode ends or a barrier is
// crossed (the macro-action's subgoal).
ExecutionResult skill_executor(const mlps::SkillLibrary& lib,
                               const ParameterizedAction& action, envs::CourseEnv& env,
                               int t_skill, Rng& rng);

}  // namespace psl::hps
