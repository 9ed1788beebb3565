#pragma once

#include "psl/core/replay.hpp"
#include "psl/core/types.hpp"

namespace psl::envs {

using core::EnvKind;
using core::Rng;
using core::TaskSpec;
using core::Vec;

// Geometry and dynamics constants shared by the point-mass families.
// Chosen so that an optimal skill needs 20-40 primitive steps per segment.
struct EnvParams {
  double segment_length = 10.0;
  double x_limit = 5.5;
  double step_scale = 0.5;   // max displacement per axis per step
  double noise_std = 0.05;   // per-axis dynamics noise
  double goal_radius = 0.5;
  double door_y = 5.0;
  double door_half_width = 1.0;  // opening width 2
  double band_y0 = 2.5;          // bridge band for Wind
  double band_y1 = 7.5;
  double band_half_width = 1.0;
  double wind_drift_scale = 0.2;  // drift per step = scale * hidden w
  double coin_radius = 0.5;
  double block_half_width = 1.5;  // static detour obstacle for Block
  double block_y0 = 4.5;
  double block_y1 = 5.5;
  bool wind_full_state = false;  // encoder sees full state for Wind
};

// Hidden-parameter ranges per kind: Door door_x in [-5,5], Wind drift w in
// [-1,1], Gather coin_x in [-4,4] per coin, Block has no parameter.
TaskSpec sample_task(EnvKind kind, Rng& rng, int horizon = 40);
Vec hidden_param_range_lo(EnvKind kind);
Vec hidden_param_range_hi(EnvKind kind);
int hidden_param_dim(EnvKind kind);

struct StepResult {
  Vec observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
  int clamp_warnings = 0;  // out-of-bounds action components this step
};

// Single-segment point-mass environment. Observation layout:
// (x, y - segment_length/2, stage, vx, vy). The hidden parameter never
// appears in observations.
class PointEnv {
 public:
  PointEnv(TaskSpec task, std::uint64_t seed, EnvParams params = {});

  Vec reset();
  StepResult step(const Vec& action);

  const TaskSpec& task() const { return task_; }
  const EnvParams& params() const { return params_; }
  int stage() const { return stage_; }
  int steps_taken() const { return t_; }
  int total_clamp_warnings() const { return clamp_warnings_total_; }
  Vec observation() const;
  static int observation_dim() { return core::kFullStateDim; }
  static int action_dim() { return 2; }

 private:
  TaskSpec task_;
  EnvParams params_;
  Rng rng_;
  double x_ = 0.0, y_ = 0.0, vx_ = 0.0, vy_ = 0.0;
  int stage_ = 0;
  int t_ = 0;
  int clamp_warnings_total_ = 0;
  bool done_ = true;
};

// Shared segment mechanics, reused by the course environment. Operates in
// local segment coordinates.
struct SegmentState {
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0;
  int stage = 0;
};

struct SegmentStepOut {
  double dense_reward = 0.0;  // staged progress reward plus bonuses
  bool reached_goal = false;  // within goal_radius of (0, segment_length)
  bool terminal_fail = false; // fell off the bridge band
  int clamp_warnings = 0;
};

SegmentStepOut segment_step(SegmentState& s, const Vec& action, const TaskSpec& task,
                            const EnvParams& params, Rng& rng, bool clamp_to_segment);

int required_stage(const TaskSpec& task);

}  // namespace psl::envs
