#include "psl/hps/trainer.hpp"

#include <cmath>

namespace psl::hps {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;
}

HighLevelReplay::HighLevelReplay(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("capacity must be positive");
}

void HighLevelReplay::insert(HighLevelTransition t) {
  if (!std::isfinite(t.r)) throw std::invalid_argument("non-finite high-level reward");
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<HighLevelTransition> HighLevelReplay::sample(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> d(0, data_.size() - 1);
  std::vector<HighLevelTransition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(data_[d(rng)]);
  return out;
}

Tape::Id hps_critic_loss(Tape& tape, HpsAgent& agent,
                         const std::vector<HighLevelTransition>& batch, double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const long m = static_cast<long>(batch.size());
  Mat norm_s(m, agent.obs_dim), oh = Mat::Zero(m, agent.num_skills),
      z(m, agent.max_dz);
  Eigen::VectorXd y(m);
  for (long i = 0; i < m; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    norm_s.row(i) = normalized_obs(agent, t.s).transpose();
    oh(i, t.k) = 1.0;
    if (agent.max_dz > 0) z.row(i) = t.z.transpose();
    const double v_next =
        t.done ? 0.0 : nn::mlp_eval(agent.value_target, normalized_obs(agent, t.s_next))[0];
    y[i] = t.r + gamma * (t.done ? 0.0 : v_next);
  }
  Tape::Id target = tape.constant(y);
  Tape::Id q1, q2;
  if (agent.separate_critics) {
    Mat in1(m, agent.obs_dim + agent.num_skills);
    in1 << norm_s, oh;
    Mat in2(m, agent.obs_dim + agent.max_dz);
    in2 << norm_s, z;
    q1 = nn::mlp_forward(tape, agent.q1, tape.constant(std::move(in1)));
    q2 = nn::mlp_forward(tape, agent.q2, tape.constant(std::move(in2)));
  } else {
    Mat in(m, agent.obs_dim + agent.num_skills + agent.max_dz);
    in << norm_s, oh, z;
    Tape::Id in_node = tape.constant(std::move(in));
    q1 = nn::mlp_forward(tape, agent.q1, in_node);
    q2 = nn::mlp_forward(tape, agent.q2, in_node);
  }
  Tape::Id e1 = tape.sub(q1, target);
  Tape::Id e2 = tape.sub(q2, target);
  return tape.add(tape.mean_all(tape.mul(e1, e1)), tape.mean_all(tape.mul(e2, e2)));
}

Tape::Id hps_actor_loss(Tape& tape, HpsAgent& agent, const std::vector<Vec>& states,
                        double alpha_ent, Rng& rng) {
  if (states.empty()) throw std::invalid_argument("no states");
  const long m = static_cast<long>(states.size());
  const long hd = std::max(agent.max_dz, 1);
  Mat norm(m, agent.obs_dim);
  for (long i = 0; i < m; ++i)
    norm.row(i) = normalized_obs(agent, states[static_cast<std::size_t>(i)]).transpose();
  Tape::Id norm_c = tape.constant(norm);

  Tape::Id logits = nn::mlp_forward(tape, agent.theta_d, norm_c);
  Tape::Id gumbel = tape.constant(nn::sample_gumbel(m, agent.num_skills, rng));
  Tape::Id soft_k = nn::gumbel_softmax(tape, logits, gumbel, agent.update_temp, false);

  Tape::Id heads = nn::mlp_forward(tape, agent.theta_c, tape.concat_cols(norm_c, soft_k));
  Tape::Id mean = tape.slice_cols(heads, 0, hd);
  Tape::Id log_std =
      tape.clamp(tape.slice_cols(heads, hd, hd), nn::kLogStdMin, nn::kLogStdMax);
  const Mat eps = nn::sample_standard_normal(m, hd, rng);
  Tape::Id u = tape.add(mean, tape.mul(tape.exp_(log_std), tape.constant(eps)));
  Tape::Id th = tape.tanh_(u);

  // Bounds and dimension masks follow the row's hard skill choice; the soft
  // vector still feeds the networks so theta_d receives gradient.
  Mat mask = Mat::Zero(m, hd), half = Mat::Ones(m, hd), mid = Mat::Zero(m, hd),
      base(m, hd);
  for (long i = 0; i < m; ++i) {
    Eigen::Index k;
    tape.val(soft_k).row(i).maxCoeff(&k);
    const int d = agent.dz[static_cast<std::size_t>(k)];
    for (long j = 0; j < hd; ++j) {
      const bool active = j < d;
      mask(i, j) = active ? 1.0 : 0.0;
      if (active) {
        half(i, j) = 0.5 * (agent.bounds_hi(k, j) - agent.bounds_lo(k, j));
        mid(i, j) = 0.5 * (agent.bounds_hi(k, j) + agent.bounds_lo(k, j));
      }
      base(i, j) = -0.5 * eps(i, j) * eps(i, j) - kHalfLog2Pi - std::log(half(i, j));
    }
  }
  Tape::Id log1m = tape.log_(
      tape.add_scalar(tape.scale(tape.mul(th, th), -1.0), 1.0 + nn::kSquashEps));
  Tape::Id term = tape.sub(tape.sub(tape.constant(base), log_std), log1m);
  Tape::Id log_prob = tape.rowsum(tape.mul(tape.constant(mask), term));

  Tape::Id q;
  Tape::Id z = -1;
  if (agent.max_dz > 0)
    z = tape.mul(tape.constant(mask),
                 tape.add(tape.constant(mid), tape.mul(tape.constant(half), th)));
  if (agent.separate_critics) {
    Tape::Id q1 = nn::mlp_forward_frozen(tape, agent.q1, tape.concat_cols(norm_c, soft_k));
    Tape::Id in2 = agent.max_dz > 0 ? tape.concat_cols(norm_c, z) : norm_c;
    Tape::Id q2 = nn::mlp_forward_frozen(tape, agent.q2, in2);
    q = tape.scale(tape.add(q1, q2), 0.5);
  } else {
    Tape::Id in = tape.concat_cols(norm_c, soft_k);
    if (agent.max_dz > 0) in = tape.concat_cols(in, z);
    q = tape.minimum(nn::mlp_forward_frozen(tape, agent.q1, in),
                     nn::mlp_forward_frozen(tape, agent.q2, in));
  }
  return tape.mean_all(tape.sub(tape.scale(log_prob, alpha_ent), q));
}

double q_estimate(const HpsAgent& agent, const Vec& s, int k, const Vec& z_padded) {
  const Vec ns = normalized_obs(agent, s);
  const Vec oh = onehot(k, agent.num_skills);
  if (agent.separate_critics) {
    Vec in1(ns.size() + oh.size());
    in1 << ns, oh;
    Vec in2(ns.size() + agent.max_dz);
    in2 << ns, z_padded;
    return 0.5 * (nn::mlp_eval(agent.q1, in1)[0] + nn::mlp_eval(agent.q2, in2)[0]);
  }
  Vec in(ns.size() + oh.size() + agent.max_dz);
  in << ns, oh, z_padded;
  return std::min(nn::mlp_eval(agent.q1, in)[0], nn::mlp_eval(agent.q2, in)[0]);
}

double value_update(HpsAgent& agent, const std::vector<Vec>& states, double alpha_ent,
                    const nn::AdamConfig& adam, Rng& rng) {
  if (states.empty()) throw std::invalid_argument("no states");
  const long m = static_cast<long>(states.size());
  Mat norm(m, agent.obs_dim);
  Eigen::VectorXd y(m);
  for (long i = 0; i < m; ++i) {
    const Vec& s = states[static_cast<std::size_t>(i)];
    const Vec ns = normalized_obs(agent, s);
    norm.row(i) = ns.transpose();
    const Vec logits = nn::mlp_eval(agent.theta_d, ns);
    Eigen::Index k;
    nn::gumbel_softmax_sample(logits, agent.update_temp, rng, true).maxCoeff(&k);
    const ContinuousSample cs =
        sample_continuous(agent, s, static_cast<int>(k), rng, false);
    Vec zp = Vec::Zero(agent.max_dz);
    zp.head(cs.z.size()) = cs.z;
    y[i] = q_estimate(agent, s, static_cast<int>(k), zp) - alpha_ent * cs.log_prob;
  }
  Tape tape;
  Tape::Id v = nn::mlp_forward(tape, agent.value, tape.constant(std::move(norm)));
  Tape::Id e = tape.sub(v, tape.constant(y));
  Tape::Id loss = tape.mean_all(tape.mul(e, e));
  tape.backward(loss);
  nn::apply_gradients(tape, adam);
  return tape.val(loss)(0, 0);
}

Vec course_obs_scale(const envs::CourseSpec& course) {
  const double n = static_cast<double>(course.barriers.size());
  Vec scale(3);
  scale << 1.0 / course.params.x_limit, 1.0 / (course.params.segment_length * n), 1.0 / n;
  return scale;
}

CourseEval evaluate_course(const HpsAgent& agent, const mlps::SkillLibrary& lib,
                           const envs::CourseSpec& course, int episodes, Rng& rng,
                           bool greedy) {
  CourseEval out;
  for (int ep = 0; ep < episodes; ++ep) {
    envs::CourseEnv env(course, rng());
    Vec s = env.reset();
    bool success = false;
    double ret = 0.0;
    for (int t = 0; t < env.high_level_horizon() && !env.done(); ++t) {
      const ParameterizedAction a = select_action(agent, s, rng, greedy);
      const ExecutionResult r = skill_executor(lib, a, env, course.skill_horizon, rng);
      ret += r.reward_sum;
      if (r.success) success = true;
      s = r.next_state;
      if (r.done) break;
    }
    out.success_rate += success ? 1.0 : 0.0;
    out.mean_return += ret;
    out.mean_barriers += env.barriers_passed();
  }
  out.success_rate /= episodes;
  out.mean_return /= episodes;
  out.mean_barriers /= episodes;
  return out;
}

HpsResult hps_train(const envs::CourseSpec& course, const mlps::SkillLibrary& lib,
                    const HpsConfig& cfg) {
  envs::validate_course(course);
  validate_library(lib);
  Rng rng(cfg.seed);

  HpsResult result;
  result.agent = make_hps_agent(lib, course_obs_scale(course), cfg.hidden, rng,
                                cfg.separate_critics);
  result.agent.interact_temp = cfg.interact_temp;
  result.agent.update_temp = cfg.update_temp;
  HpsAgent& agent = result.agent;

  nn::AdamConfig adam;
  adam.lr = cfg.lr;
  adam.max_grad_norm = cfg.max_grad_norm;
  HighLevelReplay replay(cfg.buffer_capacity);

  long episodes = 0;
  double last_critic = 0.0, last_actor = 0.0, last_value = 0.0;
  bool stop = false;
  while (result.high_steps < cfg.max_high_steps && !stop) {
    envs::CourseEnv env(course, rng());
    Vec s = env.reset();
    ++episodes;
    int ep_steps = 0;
    while (!env.done() && ep_steps < env.high_level_horizon() &&
           result.high_steps < cfg.max_high_steps) {
      const ParameterizedAction a = select_action(agent, s, rng, false);
      const ExecutionResult r = skill_executor(lib, a, env, course.skill_horizon, rng);
      ++ep_steps;
      ++result.high_steps;
      const bool done = r.done || ep_steps >= env.high_level_horizon();
      replay.insert({s, a.skill_label, pad_param(agent, a),
                     r.reward_sum * cfg.reward_scale, r.next_state, done});
      s = r.next_state;

      if (result.high_steps >= cfg.warmup_high_steps &&
          replay.size() >= static_cast<std::size_t>(cfg.batch)) {
        const auto batch = replay.sample(static_cast<std::size_t>(cfg.batch), rng);
        Tape tape;
        Tape::Id cl = hps_critic_loss(tape, agent, batch, cfg.gamma);
        tape.backward(cl);
        nn::apply_gradients(tape, adam);
        last_critic = tape.val(cl)(0, 0);

        std::vector<Vec> states;
        states.reserve(batch.size());
        for (const auto& t : batch) states.push_back(t.s);
        Tape actor_tape;
        Tape::Id al = hps_actor_loss(actor_tape, agent, states, cfg.alpha_ent, rng);
        actor_tape.backward(al);
        nn::apply_gradients(actor_tape, adam);
        last_actor = actor_tape.val(al)(0, 0);

        last_value = value_update(agent, states, cfg.alpha_ent, adam, rng);
        nn::polyak_update(agent.value, agent.value_target, cfg.polyak);
      }

      if (result.high_steps % cfg.eval_every == 0) {
        const CourseEval ev = evaluate_course(agent, lib, course, cfg.eval_episodes, rng);
        HpsMetricsRow row;
        row.high_steps = result.high_steps;
        row.episodes = episodes;
        row.eval_success = ev.success_rate;
        row.eval_return = ev.mean_return;
        row.eval_barriers = ev.mean_barriers;
        row.critic_loss = last_critic;
        row.actor_loss = last_actor;
        row.value_loss = last_value;
        result.metrics.push_back(row);
        if (cfg.on_metrics) cfg.on_metrics(row);
        if (cfg.early_stop_success >= 0.0 && ev.success_rate >= cfg.early_stop_success) {
          stop = true;
          break;
        }
      }
    }
  }
  return result;
}

}  // namespace psl::hps
