#include "psl/hps/executor.hpp"

namespace psl::hps {

ExecutionResult skill_executor(const mlps::SkillLibrary& lib,
                               const ParameterizedAction& action, envs::CourseEnv& env,
                               int t_skill, Rng& rng) {
  const mlps::SkillEntry& skill = lib.at(action.skill_label);
  if (action.skill_param.size() != skill.d_z)
    throw std::invalid_argument("skill parameter dimension mismatch");
  if (t_skill < 1) throw std::invalid_argument("t_skill must be positive");
  if (env.done()) throw std::logic_error("executor called on a finished episode");

  ExecutionResult out;
  out.trajectory.task_id = skill.name;
  for (int t = 0; t < t_skill; ++t) {
    const Vec s_low = env.low_level_observation();
    const Vec a = mlps::act(skill.policy, s_low, action.skill_param, rng, true);
    const envs::CourseEnv::PrimStep r = env.prim_step(a);
    out.trajectory.transitions.push_back(
        {s_low, a, r.reward, env.low_level_observation(), r.done});
    out.reward_sum += r.reward;
    if (r.barrier_crossed) out.barrier_crossed = true;
    if (r.success) {
      out.success = true;
      out.trajectory.success = true;
    }
    if (r.done) {
      out.done = true;
      break;
    }
    if (r.barrier_crossed) break;
  }
  out.next_state = env.high_level_observation();
  return out;
}

}  // namespace psl::hps
