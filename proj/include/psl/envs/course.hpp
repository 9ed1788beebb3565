#pragma once

#include "psl/envs/point_env.hpp"

namespace psl::envs {

// Composed obstacle course: consecutive barrier segments, each one an
// instance of a point-mass task family. The barrier list is fixed for the
// lifetime of a training run.
struct CourseSpec {
  std::vector<TaskSpec> barriers;  // 1..15 segments
  int skill_horizon = 40;          // T_skill, primitive steps per skill execution
  int high_level_horizon = 0;      // 0 means 2 * barriers
  EnvParams params;
};

void validate_course(const CourseSpec& spec);

class CourseEnv {
 public:
  CourseEnv(CourseSpec spec, std::uint64_t seed);

  // High-level observation: (x, global y, barriers_passed).
  Vec reset();
  Vec high_level_observation() const;
  // Local-frame observation of the current segment, as the frozen
  // low-level skills were trained on.
  Vec low_level_observation() const;

  struct PrimStep {
    double reward = 0.0;  // sparse: +5 per barrier, +100 at the final goal
    bool done = false;
    bool success = false;
    bool barrier_crossed = false;
  };
  PrimStep prim_step(const Vec& action);

  int barriers_passed() const { return passed_; }
  int num_barriers() const { return static_cast<int>(spec_.barriers.size()); }
  const TaskSpec& current_barrier() const;
  const CourseSpec& spec() const { return spec_; }
  bool done() const { return done_; }
  int high_level_horizon() const;

 private:
  CourseSpec spec_;
  Rng rng_;
  double x_ = 0.0, y_ = 0.0, vx_ = 0.0, vy_ = 0.0;
  int stage_ = 0;  // stage within the current segment
  int passed_ = 0;
  bool done_ = true;
};

}  // namespace psl::envs
