#include "psl/envs/course.hpp"

#include <cmath>

namespace psl::envs {

void validate_course(const CourseSpec& spec) {
  if (spec.barriers.empty() || spec.barriers.size() > 15)
    throw std::invalid_argument("course must have 1..15 barriers");
  if (spec.skill_horizon <= 0)
    throw std::invalid_argument("skill_horizon must be positive");
  for (const TaskSpec& t : spec.barriers)
    if (t.hidden_param.size() != hidden_param_dim(t.kind))
      throw std::invalid_argument("barrier hidden_param dimension mismatch");
}

CourseEnv::CourseEnv(CourseSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed) {
  validate_course(spec_);
}

int CourseEnv::high_level_horizon() const {
  return spec_.high_level_horizon > 0 ? spec_.high_level_horizon : 2 * num_barriers();
}

const TaskSpec& CourseEnv::current_barrier() const {
  const int idx = std::min(passed_, num_barriers() - 1);
  return spec_.barriers[static_cast<std::size_t>(idx)];
}

Vec CourseEnv::reset() {
  x_ = y_ = vx_ = vy_ = 0.0;
  stage_ = 0;
  passed_ = 0;
  done_ = false;
  return high_level_observation();
}

Vec CourseEnv::high_level_observation() const {
  Vec obs(3);
  obs << x_, y_, static_cast<double>(passed_);
  return obs;
}

Vec CourseEnv::low_level_observation() const {
  const double L = spec_.params.segment_length;
  const double y_local = y_ - L * passed_;
  Vec obs(core::kFullStateDim);
  obs << x_, y_local - L / 2.0, static_cast<double>(stage_), vx_, vy_;
  return obs;
}

CourseEnv::PrimStep CourseEnv::prim_step(const Vec& action) {
  if (done_) throw std::logic_error("prim_step on finished episode; call reset()");
  const double L = spec_.params.segment_length;
  const int n = num_barriers();
  const int seg = std::min(passed_, n - 1);

  SegmentState s{x_, y_ - L * seg, vx_, vy_, stage_};
  SegmentStepOut out = segment_step(s, action, spec_.barriers[static_cast<std::size_t>(seg)],
                                    spec_.params, rng_, false);
  x_ = s.x;
  vx_ = s.vx;
  vy_ = s.vy;
  stage_ = s.stage;
  y_ = s.y + L * seg;
  y_ = std::clamp(y_, 0.0, L * n);

  PrimStep res;
  if (out.terminal_fail) {
    res.done = true;
    done_ = true;
    return res;
  }
  if (passed_ < n && y_ >= L * (passed_ + 1)) {
    passed_ += 1;
    stage_ = 0;
    res.barrier_crossed = true;
    res.reward += 5.0;
  }
  // Final goal: within goal_radius of (0, L*n) with every barrier crossed.
  if (passed_ == n && std::hypot(x_, y_ - L * n) <= spec_.params.goal_radius) {
    res.reward += 100.0;
    res.success = true;
    res.done = true;
  }
  done_ = res.done;
  return res;
}

}  // namespace psl::envs
