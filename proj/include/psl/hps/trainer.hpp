#pragma once

#include "psl/hps/executor.hpp"

namespace psl::hps {

// One temporally-extended step: the reward is the env sum over the skill
// execution (stored pre-scaled), z_k zero-padded to max_dz.
struct HighLevelTransition {
  Vec s;
  int k = 0;
  Vec z;  // max_dz entries
  double r = 0.0;
  Vec s_next;
  bool done = false;
};

class HighLevelReplay {
 public:
  explicit HighLevelReplay(std::size_t capacity = 100000);
  void insert(HighLevelTransition t);
  std::vector<HighLevelTransition> sample(std::size_t n, Rng& rng) const;
  std::size_t size() const { return data_.size(); }

 private:
  std::size_t capacity_, next_ = 0;
  std::vector<HighLevelTransition> data_;
};

struct HpsConfig {
  std::vector<long> hidden{64, 64};
  double lr = 3e-4;
  double gamma = 0.99;
  double alpha_ent = 0.2;
  double polyak = 0.005;
  int batch = 128;
  double reward_scale = 5.0;
  std::size_t buffer_capacity = 100000;
  long max_high_steps = 50000;
  long warmup_high_steps = 500;
  long eval_every = 1000;
  int eval_episodes = 10;
  double early_stop_success = 0.8;  // <0 disables
  double interact_temp = 1.0;
  double update_temp = 0.5;
  bool separate_critics = false;
  double max_grad_norm = 10.0;  // 0 disables clipping
  std::uint64_t seed = 1;
  // Invoked on every evaluation row; not part of the serialized config.
  std::function<void(const struct HpsMetricsRow&)> on_metrics;
};

// Critic regression on an existing tape:
//   y = r + gamma * (1 - done) * V_target(s'), k one-hot alongside z.
Tape::Id hps_critic_loss(Tape& tape, HpsAgent& agent,
                         const std::vector<HighLevelTransition>& batch, double gamma);

// Reparameterized actor surrogate: k sampled soft (gumbel-softmax at the
// update temperature, differentiable into theta_d), z reparameterized from
// theta_c; loss = mean(alpha * log pi_c(z|s,k) - Q(s,k,z)) with frozen
// critics. The partition normalizer is actor-independent and dropped.
Tape::Id hps_actor_loss(Tape& tape, HpsAgent& agent, const std::vector<Vec>& states,
                        double alpha_ent, Rng& rng);

// V regresses toward min Q(s,k,z) - alpha * log pi_c(z|s,k) under one fresh
// policy sample per state. Returns the regression loss.
double value_update(HpsAgent& agent, const std::vector<Vec>& states, double alpha_ent,
                    const nn::AdamConfig& adam, Rng& rng);

// min of the twin joint critics; the separate-critics ablation averages the
// per-level heads instead.
double q_estimate(const HpsAgent& agent, const Vec& s, int k, const Vec& z_padded);

struct HpsMetricsRow {
  long high_steps = 0;
  long episodes = 0;
  double eval_success = 0.0;
  double eval_return = 0.0;
  double eval_barriers = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double value_loss = 0.0;
};

struct HpsResult {
  HpsAgent agent;
  std::vector<HpsMetricsRow> metrics;
  long high_steps = 0;
};

HpsResult hps_train(const envs::CourseSpec& course, const mlps::SkillLibrary& lib,
                    const HpsConfig& cfg);

struct CourseEval {
  double success_rate = 0.0;
  double mean_return = 0.0;  // raw env reward
  double mean_barriers = 0.0;
};
CourseEval evaluate_course(const HpsAgent& agent, const mlps::SkillLibrary& lib,
                           const envs::CourseSpec& course, int episodes, Rng& rng,
                           bool greedy = true);

// Normalizer for (x, global y, barriers passed) given the course extent.
Vec course_obs_scale(const envs::CourseSpec& course);

}  // namespace psl::hps
