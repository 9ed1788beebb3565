#include "psl/mlps/sac.hpp"

#include <cmath>

namespace psl::mlps {

SkillPolicy make_skill_policy(int state_dim, int action_dim, int d_z,
                              const std::vector<long>& hidden, Rng& rng) {
  if (state_dim <= 0 || action_dim <= 0 || d_z < 0)
    throw std::invalid_argument("bad skill policy dimensions");
  SkillPolicy p;
  p.state_dim = state_dim;
  p.action_dim = action_dim;
  p.d_z = d_z;
  p.actor = nn::make_mlp("actor", state_dim + d_z, hidden, 2L * action_dim,
                         nn::Activation::Relu, rng, 0.01);
  p.critic1 = nn::make_mlp("critic1", state_dim + action_dim + d_z, hidden, 1,
                           nn::Activation::Relu, rng);
  p.critic2 = nn::make_mlp("critic2", state_dim + action_dim + d_z, hidden, 1,
                           nn::Activation::Relu, rng);
  p.target1 = p.critic1;
  p.target2 = p.critic2;
  auto strip = [](nn::Param& q) {
    q.m = Mat();
    q.v = Mat();
    q.step = 0;
  };
  p.target1.for_each_param(strip);
  p.target2.for_each_param(strip);
  return p;
}

Vec normalize_z(const SkillPolicy& policy, const Vec& z) {
  if (policy.z_shift.size() == 0) return z;
  if (policy.z_shift.size() != z.size() || policy.z_scale.size() != z.size())
    throw std::invalid_argument("z normalization statistics have the wrong dimension");
  return (z - policy.z_shift).cwiseQuotient(policy.z_scale);
}

namespace {

Vec with_z(const Vec& s, const Vec& z) {
  Vec in(s.size() + z.size());
  in << s, z;
  return in;
}

}  // namespace

nn::DiagonalGaussian policy_head(const SkillPolicy& policy, const Vec& s, const Vec& z) {
  const Vec out = nn::mlp_eval(policy.actor, with_z(s, normalize_z(policy, z)));
  nn::DiagonalGaussian head;
  head.mean = out.head(policy.action_dim);
  head.log_std = out.tail(policy.action_dim);
  return head;
}

Vec act(const SkillPolicy& policy, const Vec& s, const Vec& z, Rng& rng,
        bool deterministic) {
  const nn::DiagonalGaussian head = policy_head(policy, s, z);
  if (deterministic) return head.mean.array().tanh();
  return nn::gaussian_policy_sample(head, rng).action;
}

Mat actor_input_matrix(const SkillPolicy& policy, const std::vector<Transition>& batch,
                       const Vec& z, bool next_states) {
  const long m = static_cast<long>(batch.size());
  const Vec zn = normalize_z(policy, z);
  Mat in(m, policy.state_dim + policy.d_z);
  for (long i = 0; i < m; ++i) {
    const Transition& t = batch[static_cast<std::size_t>(i)];
    in.row(i).head(policy.state_dim) =
        (next_states ? t.next_state : t.state).transpose();
    if (policy.d_z > 0) in.row(i).tail(policy.d_z) = zn.transpose();
  }
  return in;
}

Mat critic_input_matrix(const SkillPolicy& policy, const std::vector<Transition>& batch,
                        const Vec& z) {
  const long m = static_cast<long>(batch.size());
  const Vec zn = normalize_z(policy, z);
  Mat in(m, policy.state_dim + policy.action_dim + policy.d_z);
  for (long i = 0; i < m; ++i) {
    const Transition& t = batch[static_cast<std::size_t>(i)];
    in.row(i).head(policy.state_dim) = t.state.transpose();
    in.row(i).segment(policy.state_dim, policy.action_dim) = t.action.transpose();
    if (policy.d_z > 0) in.row(i).tail(policy.d_z) = zn.transpose();
  }
  return in;
}

Eigen::VectorXd critic_targets(const SkillPolicy& policy, const Vec& z,
                               const std::vector<Transition>& batch,
                               const SacConfig& cfg, Rng& rng) {
  const long m = static_cast<long>(batch.size());
  const Vec zn = normalize_z(policy, z);
  const Mat heads = nn::mlp_eval(policy.actor, actor_input_matrix(policy, batch, z, true));
  Eigen::VectorXd targets(m);
  for (long i = 0; i < m; ++i) {
    const Transition& t = batch[static_cast<std::size_t>(i)];
    double boot = 0.0;
    if (!t.done) {
      nn::DiagonalGaussian head;
      head.mean = heads.row(i).head(policy.action_dim).transpose();
      head.log_std = heads.row(i).tail(policy.action_dim).transpose();
      const nn::SquashedSample next = nn::gaussian_policy_sample(head, rng);
      Vec in(policy.state_dim + policy.action_dim + policy.d_z);
      in << t.next_state, next.action, zn;
      const double q1 = nn::mlp_eval(policy.target1, in)[0];
      const double q2 = nn::mlp_eval(policy.target2, in)[0];
      boot = std::min(q1, q2) - cfg.alpha_ent * next.log_prob;
    }
    targets[i] = t.reward + cfg.gamma * (t.done ? 0.0 : boot);
  }
  return targets;
}

Tape::Id critic_loss_tape(Tape& tape, SkillPolicy& policy, Tape::Id z_node, const Vec& z,
                          const std::vector<Transition>& batch, const SacConfig& cfg,
                          Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const long m = static_cast<long>(batch.size());
  const Eigen::VectorXd y = critic_targets(policy, z, batch, cfg, rng);

  Mat sa(m, policy.state_dim + policy.action_dim);
  for (long i = 0; i < m; ++i) {
    const Transition& t = batch[static_cast<std::size_t>(i)];
    sa.row(i).head(policy.state_dim) = t.state.transpose();
    sa.row(i).tail(policy.action_dim) = t.action.transpose();
  }
  Tape::Id input = tape.constant(std::move(sa));
  if (policy.d_z > 0) {
    Tape::Id zn = z_node;
    if (policy.z_shift.size() > 0)
      zn = tape.mul(tape.sub(z_node, tape.constant(policy.z_shift.transpose())),
                    tape.constant(policy.z_scale.cwiseInverse().transpose()));
    input = tape.concat_cols(input, tape.repeat_rows(zn, m));
  }

  Tape::Id target = tape.constant(y);
  Tape::Id q1 = mlp_forward(tape, policy.critic1, input);
  Tape::Id q2 = mlp_forward(tape, policy.critic2, input);
  Tape::Id e1 = tape.sub(q1, target);
  Tape::Id e2 = tape.sub(q2, target);
  return tape.add(tape.mean_all(tape.mul(e1, e1)), tape.mean_all(tape.mul(e2, e2)));
}

Tape::Id actor_loss_tape(Tape& tape, SkillPolicy& policy, const Vec& z,
                         const std::vector<Transition>& batch, const SacConfig& cfg,
                         Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const long m = static_cast<long>(batch.size());
  Tape::Id input = tape.constant(actor_input_matrix(policy, batch, z, false));
  Tape::Id heads = mlp_forward(tape, policy.actor, input);
  Tape::Id mean = tape.slice_cols(heads, 0, policy.action_dim);
  Tape::Id log_std = tape.slice_cols(heads, policy.action_dim, policy.action_dim);
  Tape::Id noise = tape.constant(nn::sample_standard_normal(m, policy.action_dim, rng));
  const nn::SquashedNodes sq = nn::squashed_gaussian(tape, mean, log_std, noise);

  Mat states(m, policy.state_dim);
  for (long i = 0; i < m; ++i)
    states.row(i) = batch[static_cast<std::size_t>(i)].state.transpose();
  Tape::Id critic_in = tape.concat_cols(tape.constant(std::move(states)), sq.action);
  if (policy.d_z > 0)
    critic_in = tape.concat_cols(
        critic_in, tape.constant(normalize_z(policy, z).transpose().replicate(m, 1)));
  Tape::Id q = tape.minimum(mlp_forward_frozen(tape, policy.critic1, critic_in),
                            mlp_forward_frozen(tape, policy.critic2, critic_in));
  return tape.mean_all(tape.sub(tape.scale(sq.log_prob, cfg.alpha_ent), q));
}

double actor_update(SkillPolicy& policy, const Vec& z,
                    const std::vector<Transition>& batch, const SacConfig& cfg, Rng& rng) {
  Tape tape;
  Tape::Id loss = actor_loss_tape(tape, policy, z, batch, cfg, rng);
  tape.backward(loss);
  apply_gradients(tape, cfg.adam);
  return tape.val(loss)(0, 0);
}

void polyak_critics(SkillPolicy& policy, double rho) {
  nn::polyak_update(policy.critic1, policy.target1, rho);
  nn::polyak_update(policy.critic2, policy.target2, rho);
}

double sac_update(SkillPolicy& policy, const Vec& z, const std::vector<Transition>& batch,
                  const SacConfig& cfg, Rng& rng) {
  Tape tape;
  Tape::Id z_node = policy.d_z > 0 ? tape.constant(z.transpose()) : -1;
  Tape::Id loss = critic_loss_tape(tape, policy, z_node, z, batch, cfg, rng);
  tape.backward(loss);
  apply_gradients(tape, cfg.adam);
  const double critic_loss = tape.val(loss)(0, 0);
  actor_update(policy, z, batch, cfg, rng);
  polyak_critics(policy, cfg.polyak);
  return critic_loss;
}

}  // namespace psl::mlps
