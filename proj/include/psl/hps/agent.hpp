#pragma once

#include "psl/mlps/skill_library.hpp"

namespace psl::hps {

using core::ParameterizedAction;
using core::Vec;
using nn::Mat;
using nn::Rng;
using nn::Tape;

// Hierarchical actor-critic over the parameterized action space. The joint
// policy factors as pi(k, z|s) = pi_c(z|s,k) * pi_d(k|s); one joint critic
// scores (s, one-hot k, z) so only the chosen skill's continuous head is
// ever evaluated.
struct HpsAgent {
  nn::Mlp theta_d;  // obs -> K logits
  nn::Mlp theta_c;  // obs + K one-hot -> (mean, log_std) over max_dz dims
  nn::Mlp q1, q2;   // joint: obs + K + max_dz -> 1
  nn::Mlp value, value_target;

  Mat bounds_lo, bounds_hi;  // K x max_dz; inactive dims hold [-1, 1]
  std::vector<int> dz;       // per-skill parameter dimension
  Vec obs_scale;             // elementwise high-level observation normalizer

  int num_skills = 0;
  int max_dz = 0;
  int obs_dim = 3;
  double interact_temp = 1.0;
  double update_temp = 0.5;
  // Ablation: per-level critics Q1(s, k) and Q2(s, z) instead of the joint
  // twin pair; their sum replaces min Q.
  bool separate_critics = false;

  mutable long continuous_forwards = 0;  // one per action selection
};

HpsAgent make_hps_agent(const mlps::SkillLibrary& lib, const Vec& obs_scale,
                        const std::vector<long>& hidden, Rng& rng,
                        bool separate_critics = false);

// interact: k from hard gumbel-softmax at the interaction temperature,
// z reparameterized from the continuous head and squashed into the skill's
// bounds. greedy: argmax logits and squashed mean.
ParameterizedAction select_action(const HpsAgent& agent, const Vec& s, Rng& rng,
                                  bool greedy);

// z zero-padded to max_dz for critic and replay storage.
Vec pad_param(const HpsAgent& agent, const ParameterizedAction& a);
Vec onehot(int k, int n);

// Tape-free helpers shared by the trainer.
Vec normalized_obs(const HpsAgent& agent, const Vec& s);
double continuous_log_prob(const HpsAgent& agent, const Vec& s, int k,
                           const Vec& pre_squash);

struct ContinuousSample {
  Vec z;           // bounded, dz(k) entries
  Vec pre_squash;  // max_dz entries (inactive dims carry raw noise draws)
  double log_prob = 0.0;
};
ContinuousSample sample_continuous(const HpsAgent& agent, const Vec& s, int k, Rng& rng,
                                   bool greedy);

}  // namespace psl::hps
