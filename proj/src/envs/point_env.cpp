#include "psl/envs/point_env.hpp"

#include <cmath>

namespace psl::envs {
namespace {

double dist(double x0, double y0, double x1, double y1) {
  return std::hypot(x0 - x1, y0 - y1);
}

// Active target in local coordinates for the current stage.
void active_target(const TaskSpec& task, const EnvParams& p, int stage, double& tx,
                   double& ty) {
  const double L = p.segment_length;
  switch (task.kind) {
    case EnvKind::Door:
      if (stage == 0) {
        tx = task.hidden_param[0];
        ty = p.door_y;
      } else {
        tx = 0.0;
        ty = L;
      }
      return;
    case EnvKind::GatherOne:
      if (stage == 0) {
        tx = task.hidden_param[0];
        ty = L / 2.0;
      } else {
        tx = 0.0;
        ty = L;
      }
      return;
    case EnvKind::GatherTwo:
      if (stage == 0) {
        tx = task.hidden_param[0];
        ty = L / 3.0;
      } else if (stage == 1) {
        tx = task.hidden_param[1];
        ty = 2.0 * L / 3.0;
      } else {
        tx = 0.0;
        ty = L;
      }
      return;
    case EnvKind::Wind:
    case EnvKind::Block:
      tx = 0.0;
      ty = L;
      return;
  }
  throw std::invalid_argument("unknown EnvKind");
}

bool in_block(const EnvParams& p, double x, double y) {
  return std::abs(x) <= p.block_half_width && y >= p.block_y0 && y <= p.block_y1;
}

}  // namespace

int hidden_param_dim(EnvKind kind) {
  switch (kind) {
    case EnvKind::Door:
    case EnvKind::Wind:
    case EnvKind::GatherOne: return 1;
    case EnvKind::GatherTwo: return 2;
    case EnvKind::Block: return 0;
  }
  throw std::invalid_argument("unknown EnvKind");
}

Vec hidden_param_range_lo(EnvKind kind) {
  const int d = hidden_param_dim(kind);
  Vec lo(d);
  if (kind == EnvKind::Door) lo.setConstant(-5.0);
  if (kind == EnvKind::Wind) lo.setConstant(-1.0);
  if (kind == EnvKind::GatherOne || kind == EnvKind::GatherTwo) lo.setConstant(-4.0);
  return lo;
}

Vec hidden_param_range_hi(EnvKind kind) { return -hidden_param_range_lo(kind); }

TaskSpec sample_task(EnvKind kind, Rng& rng, int horizon) {
  TaskSpec task;
  task.kind = kind;
  task.horizon = horizon;
  const Vec lo = hidden_param_range_lo(kind), hi = hidden_param_range_hi(kind);
  task.hidden_param.resize(lo.size());
  for (long i = 0; i < lo.size(); ++i) {
    std::uniform_real_distribution<double> u(lo[i], hi[i]);
    task.hidden_param[i] = u(rng);
  }
  return task;
}

int required_stage(const TaskSpec& task) {
  switch (task.kind) {
    case EnvKind::Door:
    case EnvKind::GatherOne: return 1;
    case EnvKind::GatherTwo: return 2;
    case EnvKind::Wind:
    case EnvKind::Block: return 0;
  }
  throw std::invalid_argument("unknown EnvKind");
}

SegmentStepOut segment_step(SegmentState& s, const Vec& action, const TaskSpec& task,
                            const EnvParams& p, Rng& rng, bool clamp_to_segment) {
  if (action.size() != 2) throw std::invalid_argument("action must be a 2-vector");
  SegmentStepOut out;

  Vec a = action;
  for (long i = 0; i < 2; ++i) {
    if (a[i] < -1.0 || a[i] > 1.0) {
      a[i] = std::clamp(a[i], -1.0, 1.0);
      ++out.clamp_warnings;
    }
  }

  double dx = p.step_scale * a[0];
  double dy = p.step_scale * a[1];
  const bool in_band = s.y >= p.band_y0 && s.y <= p.band_y1;
  if (task.kind == EnvKind::Wind && in_band)
    dx += p.wind_drift_scale * task.hidden_param[0];
  if (p.noise_std > 0.0) {
    std::normal_distribution<double> eps(0.0, p.noise_std);
    dx += eps(rng);
    dy += eps(rng);
  }

  double tx, ty;
  active_target(task, p, s.stage, tx, ty);
  const double d_prev = dist(s.x, s.y, tx, ty);

  double nx = std::clamp(s.x + dx, -p.x_limit, p.x_limit);
  double ny = s.y + dy;
  if (clamp_to_segment) ny = std::clamp(ny, 0.0, p.segment_length);

  bool passed_door_now = false;
  if (task.kind == EnvKind::Door) {
    const bool crossing = (s.y < p.door_y) != (ny < p.door_y);
    if (crossing) {
      const bool through_opening =
          std::abs(nx - task.hidden_param[0]) <= p.door_half_width;
      if (!through_opening) {
        // Blocked by the wall; slide along it.
        ny = (s.y < p.door_y) ? std::nextafter(p.door_y, 0.0)
                              : std::nextafter(p.door_y, p.segment_length);
      } else if (s.stage == 0 && s.y < p.door_y) {
        passed_door_now = true;
      }
    }
  }
  if (task.kind == EnvKind::Block && in_block(p, nx, ny)) {
    if (!in_block(p, nx, s.y)) {
      ny = s.y;
    } else if (!in_block(p, s.x, ny)) {
      nx = s.x;
    } else {
      nx = s.x;
      ny = s.y;
    }
  }

  s.vx = nx - s.x;
  s.vy = ny - s.y;
  s.x = nx;
  s.y = ny;

  // Progress toward the stage's active target.
  out.dense_reward = d_prev - dist(s.x, s.y, tx, ty);

  if (passed_door_now) {
    s.stage = 1;
    out.dense_reward += 10.0;
  }
  if ((task.kind == EnvKind::GatherOne || task.kind == EnvKind::GatherTwo) &&
      s.stage < required_stage(task)) {
    if (dist(s.x, s.y, tx, ty) <= p.coin_radius) {
      s.stage += 1;
      out.dense_reward += 10.0;
    }
  }
  if (task.kind == EnvKind::Wind) {
    const bool now_in_band = s.y >= p.band_y0 && s.y <= p.band_y1;
    if (now_in_band && std::abs(s.x) > p.band_half_width) {
      out.terminal_fail = true;
      out.dense_reward = 0.0;
      return out;
    }
  }
  if (s.stage >= required_stage(task) &&
      dist(s.x, s.y, 0.0, p.segment_length) <= p.goal_radius) {
    out.reached_goal = true;
    out.dense_reward += 20.0;
  }
  return out;
}

PointEnv::PointEnv(TaskSpec task, std::uint64_t seed, EnvParams params)
    : task_(std::move(task)), params_(params), rng_(seed) {
  if (task_.horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (task_.hidden_param.size() != hidden_param_dim(task_.kind))
    throw std::invalid_argument("hidden_param dimension mismatch for env kind");
  const Vec lo = hidden_param_range_lo(task_.kind), hi = hidden_param_range_hi(task_.kind);
  for (long i = 0; i < lo.size(); ++i)
    if (task_.hidden_param[i] < lo[i] || task_.hidden_param[i] > hi[i])
      throw std::invalid_argument("hidden_param outside declared range");
}

Vec PointEnv::reset() {
  x_ = y_ = vx_ = vy_ = 0.0;
  stage_ = 0;
  t_ = 0;
  done_ = false;
  return observation();
}

Vec PointEnv::observation() const {
  Vec obs(core::kFullStateDim);
  obs << x_, y_ - params_.segment_length / 2.0, static_cast<double>(stage_), vx_, vy_;
  return obs;
}

StepResult PointEnv::step(const Vec& action) {
  if (done_) throw std::logic_error("step on finished episode; call reset()");
  SegmentState s{x_, y_, vx_, vy_, stage_};
  SegmentStepOut seg = segment_step(s, action, task_, params_, rng_, true);
  x_ = s.x;
  y_ = s.y;
  vx_ = s.vx;
  vy_ = s.vy;
  stage_ = s.stage;
  t_ += 1;
  clamp_warnings_total_ += seg.clamp_warnings;

  StepResult res;
  res.observation = observation();
  res.reward = seg.dense_reward;
  res.success = seg.reached_goal;
  res.done = seg.reached_goal || seg.terminal_fail || t_ >= task_.horizon;
  res.clamp_warnings = seg.clamp_warnings;
  done_ = res.done;
  return res;
}

}  // namespace psl::envs
