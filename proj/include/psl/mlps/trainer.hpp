#pragma once

#include <functional>

#include "psl/core/replay.hpp"
#include "psl/dtw/dtw.hpp"
#include "psl/mlps/losses.hpp"
#include "psl/mlps/skill_library.hpp"

namespace psl::mlps {

using core::TaskSpec;
using core::Trajectory;

// Meta-training configuration. Loss weights default to the Door analog of
// the Ant-goal row: alpha=10, beta=1, kappa=0.5, meta batch 16, embedding
// batch 100.
struct MlpsConfig {
  core::EnvKind kind = core::EnvKind::Door;
  int num_train_tasks = 100;
  int d_z = 2;  // forced to 0 for kinds without a hidden parameter
  std::vector<long> policy_hidden{64, 64};
  std::vector<long> encoder_hidden{64, 64};
  double lr = 3e-4;
  double gamma = 0.99;
  double alpha_ent = 0.2;
  double polyak = 0.005;
  double alpha_nce = 10.0;
  double beta_smooth = 1.0;
  double kappa = 0.5;
  double kl_scale = 0.1;
  int meta_batch = 16;
  int embedding_batch = 100;
  int horizon = 40;
  int dtw_length = 40;
  std::size_t buffer_capacity = 100000;
  long max_env_steps = 200000;
  int tasks_per_round = 4;
  int prior_episodes = 2;
  int posterior_episodes = 1;
  int train_steps_per_round = 100;
  double max_grad_norm = 10.0;  // 0 disables clipping
  // Env steps to ramp the smoothness weight from 0 to beta_smooth once the
  // gate opens; the embeddings migrate toward the kappa * DTW scale, and a
  // sudden switch destabilizes the converged critic. 0 applies beta at once.
  long smooth_anneal_steps = 50000;
  // Encoder learning-rate multiplier applied when the gate opens; an escape
  // hatch for slowing the embedding migration. With z whitening enabled the
  // full rate works best, so the default leaves the encoder untouched.
  double gate_encoder_lr_scale = 1.0;
  // EMA rate for the policy's z normalization statistics (see SkillPolicy
  // z_shift/z_scale), tracked only after the smoothness gate opens; the
  // actor and critics see whitened embeddings, so the smoothness-driven
  // migration of the embedding scale does not invalidate the learned
  // policy. 0 disables whitening.
  double z_whiten_tau = 0.01;
  long warmup_steps = 2000;  // no gradient updates before this many env steps
  int eval_every_rounds = 10;
  int eval_tasks = 20;
  int eval_episodes = 3;
  double early_stop_success = 0.9;  // <0 disables early stopping
  std::uint64_t seed = 1;
  envs::EnvParams env;
  // Invoked on every evaluation row; not part of the serialized config.
  std::function<void(const struct MlpsMetricsRow&)> on_metrics;
};

void validate_config(const MlpsConfig& cfg);

struct MlpsMetricsRow {
  long env_steps = 0;
  int round = 0;
  double eval_success = 0.0;
  double eval_return = 0.0;
  double train_return = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double nce_loss = 0.0;
  double smooth_loss = 0.0;
  double kl = 0.0;
  bool dtw_active = false;
};

struct MlpsArtifacts {
  MlpsConfig config;
  SkillPolicy policy;
  std::optional<ContextEncoder> encoder;
  std::optional<ContextEncoder> encoder_target;
  std::optional<BilinearSimilarity> sim;
  std::vector<TaskSpec> train_tasks;
  std::vector<MlpsMetricsRow> metrics;
  long env_steps = 0;
};

// Full meta-training loop: per-task rollouts (prior-z exploration episodes
// then posterior episodes), joint encoder/critic updates with InfoNCE,
// KL-to-prior and the DTW smoothness term (gated on every task holding a
// success trajectory), separate actor updates, Polyak-tracked targets.
MlpsArtifacts mlps_train(const MlpsConfig& cfg);

struct MetaTestResult {
  Vec z_final;  // posterior mean after all adaptation episodes
  bool success = false;
  double episode_return = 0.0;                // last episode
  std::vector<Trajectory> trajectories;       // one per episode
};

// Standard meta-test: episode 1 acts under z ~ prior, later episodes
// condition on the posterior over all collected transitions.
MetaTestResult meta_test(const SkillPolicy& policy, const ContextEncoder* enc,
                         const TaskSpec& task, int episodes, const envs::EnvParams& env,
                         Rng& rng);

// t% central range per dimension (linear-interpolation percentiles).
// Requires >= 20 samples and t in [90, 100). Zero-width dimensions are
// widened by 1e-6; the count of such dimensions is reported.
struct ActionBounds {
  Vec lo, hi;
  int degenerate_dims = 0;
};
ActionBounds compute_action_bounds(const std::vector<Vec>& z_samples, double t);

// Held-out smoothness residual: success trajectories and posterior-mean
// embeddings from meta-tests on the given tasks, evaluated with Eq.-style
// pairwise residuals. normalized divides by the mean squared kappa-scaled
// DTW distance.
struct SmoothnessReport {
  double residual = 0.0;
  double normalized = 0.0;
  int pairs = 0;
  int tasks_with_success = 0;
};
SmoothnessReport held_out_smoothness(const SkillPolicy& policy, const ContextEncoder& enc,
                                     const std::vector<TaskSpec>& tasks, double kappa,
                                     int dtw_length, const envs::EnvParams& env,
                                     int episodes, Rng& rng);

// Evenly spaced tasks across the hidden-parameter range (dimension 0 varies,
// remaining dimensions at midpoint).
std::vector<TaskSpec> linspace_tasks(core::EnvKind kind, int count, int horizon);

}  // namespace psl::mlps
