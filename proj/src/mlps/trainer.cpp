#include "psl/mlps/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace psl::mlps {

void validate_config(const MlpsConfig& cfg) {
  if (cfg.num_train_tasks < 1) throw std::invalid_argument("num_train_tasks must be positive");
  if (cfg.d_z < 0) throw std::invalid_argument("d_z must be non-negative");
  if (cfg.meta_batch < 2) throw std::invalid_argument("meta_batch must be at least 2");
  if (cfg.embedding_batch < 1) throw std::invalid_argument("embedding_batch must be positive");
  if (cfg.horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (cfg.dtw_length < 2) throw std::invalid_argument("dtw_length must be at least 2");
  if (cfg.kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
  if (cfg.max_env_steps < 1) throw std::invalid_argument("max_env_steps must be positive");
  if (cfg.tasks_per_round < 1) throw std::invalid_argument("tasks_per_round must be positive");
  if (cfg.prior_episodes + cfg.posterior_episodes < 1)
    throw std::invalid_argument("at least one collection episode per task visit");
  if (cfg.lr <= 0.0) throw std::invalid_argument("lr must be positive");
}

namespace {

struct Rollout {
  Trajectory traj;
  double episode_return = 0.0;
};

Rollout run_episode(const SkillPolicy& policy, const TaskSpec& task, const Vec& z,
                    bool deterministic, const envs::EnvParams& env_params,
                    std::uint64_t env_seed, Rng& rng, int task_index) {
  envs::PointEnv env(task, env_seed, env_params);
  Rollout out;
  out.traj.task_id = core::to_string(task.kind) + "/" + std::to_string(task_index);
  Vec s = env.reset();
  for (;;) {
    const Vec a = act(policy, s, z, rng, deterministic);
    const envs::StepResult r = env.step(a);
    out.traj.transitions.push_back({s, a, r.reward, r.observation, r.done});
    out.episode_return += r.reward;
    if (r.success) out.traj.success = true;
    s = r.observation;
    if (r.done) break;
  }
  return out;
}

std::vector<std::size_t> pick_distinct(const std::vector<std::size_t>& pool, std::size_t n,
                                       Rng& rng) {
  std::vector<std::size_t> picked = pool;
  for (std::size_t i = 0; i < std::min(n, picked.size()); ++i) {
    std::uniform_int_distribution<std::size_t> d(i, picked.size() - 1);
    std::swap(picked[i], picked[d(rng)]);
  }
  picked.resize(std::min(n, picked.size()));
  return picked;
}

}  // namespace

MlpsArtifacts mlps_train(const MlpsConfig& raw_cfg) {
  MlpsConfig cfg = raw_cfg;
  if (envs::hidden_param_dim(cfg.kind) == 0) cfg.d_z = 0;
  validate_config(cfg);

  Rng rng(cfg.seed);
  MlpsArtifacts art;
  art.config = cfg;

  const int num_tasks = cfg.d_z > 0 ? cfg.num_train_tasks : 1;
  for (int i = 0; i < num_tasks; ++i)
    art.train_tasks.push_back(envs::sample_task(cfg.kind, rng, cfg.horizon));

  art.policy = make_skill_policy(core::kFullStateDim, envs::PointEnv::action_dim(), cfg.d_z,
                                 cfg.policy_hidden, rng);
  // Running first/second moments of the posterior samples; the prior is
  // standard normal, so identity statistics are the right starting point.
  Vec z_m1 = Vec::Zero(cfg.d_z), z_m2 = Vec::Ones(cfg.d_z);
  if (cfg.d_z > 0 && cfg.z_whiten_tau > 0.0) {
    art.policy.z_shift = Vec::Zero(cfg.d_z);
    art.policy.z_scale = Vec::Ones(cfg.d_z);
  }
  if (cfg.d_z > 0) {
    art.encoder = make_context_encoder(cfg.kind, cfg.d_z, cfg.encoder_hidden, rng,
                                       cfg.env.wind_full_state);
    art.encoder_target = clone_encoder(*art.encoder);
    art.sim = make_bilinear(cfg.d_z, rng);
  }

  SacConfig sac;
  sac.gamma = cfg.gamma;
  sac.alpha_ent = cfg.alpha_ent;
  sac.polyak = cfg.polyak;
  sac.adam.lr = cfg.lr;
  sac.adam.max_grad_norm = cfg.max_grad_norm;

  std::vector<core::TaskReplayBuffer> buffers(
      static_cast<std::size_t>(num_tasks), core::TaskReplayBuffer(cfg.buffer_capacity));

  const std::vector<TaskSpec> eval_tasks =
      linspace_tasks(cfg.kind, cfg.eval_tasks, cfg.horizon);

  auto run_eval = [&]() {
    double successes = 0.0, ret = 0.0;
    for (const TaskSpec& task : eval_tasks) {
      const ContextEncoder* enc = art.encoder ? &*art.encoder : nullptr;
      const MetaTestResult r =
          meta_test(art.policy, enc, task, cfg.eval_episodes, cfg.env, rng);
      successes += r.success ? 1.0 : 0.0;
      ret += r.episode_return;
    }
    const double n = static_cast<double>(eval_tasks.size());
    return std::pair<double, double>{successes / n, ret / n};
  };

  int round = 0;
  int next_task = 0;
  int next_gap = 0;
  bool dtw_active = false;
  long dtw_gate_step = 0;
  double last_critic = 0.0, last_actor = 0.0, last_nce = 0.0, last_smooth = 0.0,
         last_kl = 0.0;
  while (art.env_steps < cfg.max_env_steps) {
    ++round;

    // Data collection: prior-z exploration episodes then one or more
    // episodes conditioned on the posterior over this task's buffer.
    double round_return = 0.0;
    int round_episodes = 0;
    for (int visit = 0; visit < cfg.tasks_per_round; ++visit) {
      // Round-robin visits so every buffer fills at the same pace; before
      // the smoothness gate opens, every other visit instead targets a task
      // still missing a success trajectory, since the gate waits on the
      // slowest task.
      int ti = -1;
      if (!dtw_active && cfg.d_z > 0 && visit % 2 == 1) {
        for (int k = 0; k < num_tasks; ++k) {
          const int cand = (next_gap + k) % num_tasks;
          if (buffers[static_cast<std::size_t>(cand)].num_success_trajectories() == 0) {
            ti = cand;
            next_gap = (cand + 1) % num_tasks;
            break;
          }
        }
      }
      if (ti < 0) {
        ti = next_task;
        next_task = (next_task + 1) % num_tasks;
      }
      auto& buf = buffers[static_cast<std::size_t>(ti)];
      const int episodes = cfg.prior_episodes + cfg.posterior_episodes;
      for (int ep = 0; ep < episodes; ++ep) {
        Vec z(cfg.d_z);
        if (cfg.d_z > 0) {
          if (ep < cfg.prior_episodes || buf.empty()) {
            z = nn::sample_standard_normal(cfg.d_z, rng);
          } else {
            const auto ctx = buf.sample_transitions(
                std::min<std::size_t>(buf.size(), cfg.embedding_batch), rng);
            z = sample_posterior(encode_context(*art.encoder, ctx), rng);
          }
        }
        const Rollout r =
            run_episode(art.policy, art.train_tasks[static_cast<std::size_t>(ti)], z,
                        false, cfg.env, rng(), rng, ti);
        buf.insert(r.traj);
        art.env_steps += static_cast<long>(r.traj.size());
        round_return += r.episode_return;
        ++round_episodes;
      }
    }

    if (art.env_steps >= cfg.warmup_steps) {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < buffers.size(); ++i)
        if (!buffers[i].empty()) eligible.push_back(i);

      if (!dtw_active && cfg.d_z > 0) {
        dtw_active = eligible.size() == buffers.size() &&
                     std::all_of(buffers.begin(), buffers.end(), [](const auto& b) {
                       return b.num_success_trajectories() > 0;
                     });
        if (dtw_active) {
          dtw_gate_step = art.env_steps;
          art.encoder->net.for_each_param(
              [&](nn::Param& p) { p.lr_scale = cfg.gate_encoder_lr_scale; });
        }
      }
      double smooth_weight = cfg.beta_smooth;
      if (dtw_active && cfg.smooth_anneal_steps > 0)
        smooth_weight *= std::min(
            1.0, static_cast<double>(art.env_steps - dtw_gate_step) /
                     static_cast<double>(cfg.smooth_anneal_steps));

      for (int step = 0; step < cfg.train_steps_per_round && !eligible.empty(); ++step) {
        if (cfg.d_z == 0) {
          const auto batch = buffers[0].sample_transitions(cfg.embedding_batch, rng);
          last_critic = sac_update(art.policy, Vec(0), batch, sac, rng);
          continue;
        }
        const auto chosen =
            pick_distinct(eligible, static_cast<std::size_t>(cfg.meta_batch), rng);
        const std::size_t c = chosen.size();

        Tape tape;
        std::vector<Tape::Id> samples(c);
        std::vector<Vec> z_vals(c);
        Mat targets(static_cast<long>(c), cfg.d_z);
        std::vector<std::vector<Transition>> rl_batches(c);
        Tape::Id critic_sum = -1, kl_sum = -1;
        for (std::size_t i = 0; i < c; ++i) {
          auto& buf = buffers[chosen[i]];
          rl_batches[i] = buf.sample_transitions(cfg.embedding_batch, rng);
          const auto b2 = buf.sample_transitions(cfg.embedding_batch, rng);
          const PosteriorNodes post = encode_context_tape(
              tape, *art.encoder, rl_batches[i], nn::sample_standard_normal(cfg.d_z, rng));
          samples[i] = post.sample;
          z_vals[i] = tape.val(post.sample).transpose();
          targets.row(static_cast<long>(i)) =
              sample_posterior(encode_context(*art.encoder_target, b2), rng).transpose();

          Tape::Id cl = critic_loss_tape(tape, art.policy, post.sample, z_vals[i],
                                         rl_batches[i], sac, rng);
          Tape::Id kl = kl_to_prior(tape, post);
          critic_sum = i == 0 ? cl : tape.add(critic_sum, cl);
          kl_sum = i == 0 ? kl : tape.add(kl_sum, kl);
        }

        Tape::Id loss = tape.scale(critic_sum, 1.0 / static_cast<double>(c));
        Tape::Id kl_mean = tape.scale(kl_sum, cfg.kl_scale / static_cast<double>(c));
        loss = tape.add(loss, kl_mean);
        last_kl = tape.val(kl_mean)(0, 0) / cfg.kl_scale;

        Tape::Id nce = -1;
        if (c >= 2 && cfg.alpha_nce != 0.0) {
          Tape::Id anchors = tape.concat_rows(samples);
          nce = info_nce_loss(tape, anchors, targets, *art.sim);
          loss = tape.add(loss, tape.scale(nce, cfg.alpha_nce));
          last_nce = tape.val(nce)(0, 0);
        }

        if (dtw_active && c >= 2 && smooth_weight != 0.0) {
          std::vector<dtw::StateSequence> seqs(c);
          for (std::size_t i = 0; i < c; ++i) {
            const auto traj = buffers[chosen[i]].sample_trajectory(true, rng);
            seqs[i] = dtw::trajectory_to_sequence(*traj, cfg.kind, cfg.dtw_length,
                                                  cfg.env.wind_full_state);
          }
          const std::size_t pairs = c * (c - 1);
          std::vector<Tape::Id> anchor_ids;
          anchor_ids.reserve(pairs);
          Mat pair_targets(static_cast<long>(pairs), cfg.d_z);
          Eigen::VectorXd dtw_vals(static_cast<long>(pairs));
          long p = 0;
          for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              if (i == j) continue;
              anchor_ids.push_back(samples[i]);
              pair_targets.row(p) = targets.row(static_cast<long>(j));
              dtw_vals[p] = dtw::dtw_distance(seqs[i], seqs[j]);
              ++p;
            }
          Tape::Id smooth = smoothness_loss(tape, tape.concat_rows(anchor_ids),
                                            pair_targets, dtw_vals, cfg.kappa);
          loss = tape.add(loss, tape.scale(smooth, smooth_weight));
          last_smooth = tape.val(smooth)(0, 0);
        }

        last_critic = tape.val(critic_sum)(0, 0) / static_cast<double>(c);
        tape.backward(loss);
        apply_gradients(tape, sac.adam);

        double actor_sum = 0.0;
        for (std::size_t i = 0; i < c; ++i)
          actor_sum += actor_update(art.policy, z_vals[i], rl_batches[i], sac, rng);
        last_actor = actor_sum / static_cast<double>(c);

        polyak_critics(art.policy, cfg.polyak);
        nn::polyak_update(art.encoder->net, art.encoder_target->net, cfg.polyak);

        // Track embedding statistics only once the smoothness term can move
        // them; before the gate the posterior stays near the unit prior and
        // rescaling it only blurs the task contrast the policy relies on.
        if (dtw_active && cfg.z_whiten_tau > 0.0) {
          Vec m1 = Vec::Zero(cfg.d_z), m2 = Vec::Zero(cfg.d_z);
          for (const Vec& zv : z_vals) {
            m1 += zv;
            m2 += zv.cwiseProduct(zv);
          }
          m1 /= static_cast<double>(c);
          m2 /= static_cast<double>(c);
          z_m1 = (1.0 - cfg.z_whiten_tau) * z_m1 + cfg.z_whiten_tau * m1;
          z_m2 = (1.0 - cfg.z_whiten_tau) * z_m2 + cfg.z_whiten_tau * m2;
          art.policy.z_shift = z_m1;
          art.policy.z_scale =
              (z_m2 - z_m1.cwiseProduct(z_m1)).cwiseMax(1e-6).cwiseSqrt();
        }
      }
    }

    if (round % cfg.eval_every_rounds == 0 || art.env_steps >= cfg.max_env_steps) {
      const auto [success, ret] = run_eval();
      MlpsMetricsRow row;
      row.env_steps = art.env_steps;
      row.round = round;
      row.eval_success = success;
      row.eval_return = ret;
      row.train_return = round_episodes > 0 ? round_return / round_episodes : 0.0;
      row.critic_loss = last_critic;
      row.actor_loss = last_actor;
      row.nce_loss = last_nce;
      row.smooth_loss = last_smooth;
      row.kl = last_kl;
      row.dtw_active = dtw_active;
      art.metrics.push_back(row);
      if (cfg.on_metrics) cfg.on_metrics(row);
      if (cfg.early_stop_success >= 0.0 && success >= cfg.early_stop_success) break;
    }
  }
  return art;
}

MetaTestResult meta_test(const SkillPolicy& policy, const ContextEncoder* enc,
                         const TaskSpec& task, int episodes, const envs::EnvParams& env,
                         Rng& rng) {
  if (episodes < 1) throw std::invalid_argument("episodes must be positive");
  MetaTestResult result;
  const int d_z = policy.d_z;
  std::vector<Transition> context;
  for (int ep = 0; ep < episodes; ++ep) {
    Vec z(d_z);
    if (d_z > 0) {
      if (ep == 0)
        z = nn::sample_standard_normal(d_z, rng);
      else
        z = sample_posterior(encode_context(*enc, context), rng);
    }
    const bool deterministic = ep > 0;
    const Rollout r = run_episode(policy, task, z, deterministic, env, rng(), rng, 0);
    context.insert(context.end(), r.traj.transitions.begin(), r.traj.transitions.end());
    result.success = r.traj.success;
    result.episode_return = r.episode_return;
    result.trajectories.push_back(r.traj);
  }
  result.z_final = d_z > 0 ? encode_context(*enc, context).mean : Vec(0);
  return result;
}

ActionBounds compute_action_bounds(const std::vector<Vec>& z_samples, double t) {
  if (z_samples.size() < 20)
    throw std::invalid_argument("action bounds need at least 20 samples");
  if (t < 90.0 || t >= 100.0)
    throw std::invalid_argument("central range t must lie in [90, 100)");
  const long d = z_samples.front().size();
  for (const Vec& z : z_samples)
    if (z.size() != d) throw std::invalid_argument("inconsistent sample dimension");

  auto percentile = [](std::vector<double>& vals, double p) {
    std::sort(vals.begin(), vals.end());
    const double rank = p / 100.0 * static_cast<double>(vals.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= vals.size()) return vals.back();
    return vals[lo] + (vals[lo + 1] - vals[lo]) * frac;
  };

  ActionBounds b;
  b.lo = Vec(d);
  b.hi = Vec(d);
  const double tail = (100.0 - t) / 2.0;
  for (long i = 0; i < d; ++i) {
    std::vector<double> vals;
    vals.reserve(z_samples.size());
    for (const Vec& z : z_samples) vals.push_back(z[i]);
    b.lo[i] = percentile(vals, tail);
    b.hi[i] = percentile(vals, 100.0 - tail);
    if (!(b.lo[i] < b.hi[i])) {
      b.lo[i] -= 1e-6;
      b.hi[i] += 1e-6;
      ++b.degenerate_dims;
    }
  }
  return b;
}

SmoothnessReport held_out_smoothness(const SkillPolicy& policy, const ContextEncoder& enc,
                                     const std::vector<TaskSpec>& tasks, double kappa,
                                     int dtw_length, const envs::EnvParams& env,
                                     int episodes, Rng& rng) {
  SmoothnessReport rep;
  std::vector<Vec> zs;
  std::vector<dtw::StateSequence> seqs;
  for (const TaskSpec& task : tasks) {
    const MetaTestResult r = meta_test(policy, &enc, task, episodes, env, rng);
    const Trajectory* success = nullptr;
    for (const Trajectory& t : r.trajectories)
      if (t.success) success = &t;
    if (!success) continue;
    zs.push_back(r.z_final);
    seqs.push_back(dtw::trajectory_to_sequence(*success, task.kind, dtw_length,
                                               env.wind_full_state));
  }
  rep.tasks_with_success = static_cast<int>(zs.size());
  double sum = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i)
    for (std::size_t j = i + 1; j < zs.size(); ++j) {
      const double d = kappa * dtw::dtw_distance(seqs[i], seqs[j]);
      const double r = (zs[i] - zs[j]).norm() - d;
      sum += r * r;
      norm += d * d;
      ++rep.pairs;
    }
  if (rep.pairs > 0) {
    rep.residual = sum / rep.pairs;
    rep.normalized = norm > 0.0 ? sum / norm : 0.0;
  }
  return rep;
}

std::vector<TaskSpec> linspace_tasks(core::EnvKind kind, int count, int horizon) {
  if (count < 1) throw std::invalid_argument("count must be positive");
  const int dim = envs::hidden_param_dim(kind);
  const Vec lo = envs::hidden_param_range_lo(kind);
  const Vec hi = envs::hidden_param_range_hi(kind);
  std::vector<TaskSpec> tasks;
  for (int i = 0; i < count; ++i) {
    TaskSpec t;
    t.kind = kind;
    t.horizon = horizon;
    t.hidden_param = Vec(dim);
    for (int d = 0; d < dim; ++d) t.hidden_param[d] = 0.5 * (lo[d] + hi[d]);
    if (dim > 0 && count > 1)
      t.hidden_param[0] =
          lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / (count - 1);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace psl::mlps
