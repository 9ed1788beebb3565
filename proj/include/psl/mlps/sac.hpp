#pragma once

#include "psl/core/types.hpp"
#include "psl/nn/distributions.hpp"

namespace psl::mlps {

using core::Transition;
using core::Vec;
using nn::Mat;
using nn::Rng;
using nn::Tape;

// z-conditioned maximum-entropy actor-critic: actor pi(a|s,z) and twin
// critics Q(s,a,z) with Polyak-tracked targets.
struct SkillPolicy {
  nn::Mlp actor;  // (s + z) -> (mean, log_std)
  nn::Mlp critic1, critic2;
  nn::Mlp target1, target2;
  int state_dim = core::kFullStateDim;
  int action_dim = 2;
  int d_z = 2;
  // Affine normalization applied to z before any network sees it. Empty
  // vectors mean identity. The trainer tracks running embedding statistics
  // here so a drifting embedding scale stays invisible to the actor and
  // critics; callers keep passing raw embeddings.
  Vec z_shift, z_scale;
};

// (z - z_shift) / z_scale, or z unchanged when no statistics are set.
Vec normalize_z(const SkillPolicy& policy, const Vec& z);

SkillPolicy make_skill_policy(int state_dim, int action_dim, int d_z,
                              const std::vector<long>& hidden, Rng& rng);

nn::DiagonalGaussian policy_head(const SkillPolicy& policy, const Vec& s, const Vec& z);

// deterministic=true returns tanh(mean).
Vec act(const SkillPolicy& policy, const Vec& s, const Vec& z, Rng& rng,
        bool deterministic);

struct SacConfig {
  double gamma = 0.99;
  double alpha_ent = 0.2;
  double polyak = 0.005;
  nn::AdamConfig adam;
};

// Twin-critic Bellman regression targets:
//   y = r + gamma * (1 - done) * (min Q_target(s', a', z) - alpha * log pi(a'|s', z)).
Eigen::VectorXd critic_targets(const SkillPolicy& policy, const Vec& z,
                               const std::vector<Transition>& batch,
                               const SacConfig& cfg, Rng& rng);

// Critic regression loss on an existing tape. z_node (1 x d_z) stays
// attached so the loss trains whatever produced z (the context encoder).
// Pass z_node = -1 when d_z == 0.
Tape::Id critic_loss_tape(Tape& tape, SkillPolicy& policy, Tape::Id z_node, const Vec& z,
                          const std::vector<Transition>& batch, const SacConfig& cfg,
                          Rng& rng);

// Reparameterized actor step on its own tape; critics are frozen and z is a
// constant. Returns the actor loss value.
double actor_update(SkillPolicy& policy, const Vec& z,
                    const std::vector<Transition>& batch, const SacConfig& cfg, Rng& rng);

// Same objective as actor_update without applying gradients (diagnostics
// and finite-difference checks).
Tape::Id actor_loss_tape(Tape& tape, SkillPolicy& policy, const Vec& z,
                         const std::vector<Transition>& batch, const SacConfig& cfg,
                         Rng& rng);

void polyak_critics(SkillPolicy& policy, double rho);

// Self-contained SAC step (critic + actor + target update) with z treated
// as a constant; returns the critic loss.
double sac_update(SkillPolicy& policy, const Vec& z, const std::vector<Transition>& batch,
                  const SacConfig& cfg, Rng& rng);

// Batched helpers shared with the trainer.
Mat actor_input_matrix(const SkillPolicy& policy, const std::vector<Transition>& batch,
                       const Vec& z, bool next_states);
Mat critic_input_matrix(const SkillPolicy& policy, const std::vector<Transition>& batch,
                        const Vec& z);

}  // namespace psl::mlps
