#include "psl/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace psl::harness {

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

const mlps::ContextEncoder* encoder_of(const SkillCheckpoint& c) {
  return c.encoder ? &*c.encoder : nullptr;
}

// Meta-tests the task until one episode succeeds; returns that episode's
// trajectory.
std::optional<core::Trajectory> collect_success(const SkillCheckpoint& c,
                                                const core::TaskSpec& task, int episodes,
                                                int max_attempts, nn::Rng& rng) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const mlps::MetaTestResult r =
        mlps::meta_test(c.policy, encoder_of(c), task, episodes, c.config.env, rng);
    for (auto it = r.trajectories.rbegin(); it != r.trajectories.rend(); ++it)
      if (it->success) return *it;
  }
  return std::nullopt;
}

CvScenario scenario_from(const std::vector<dtw::StateSequence>& seqs, int dtw_length) {
  CvScenario s;
  std::vector<double> dtw_vals, euc_vals;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (std::size_t j = i + 1; j < seqs.size(); ++j) {
      dtw_vals.push_back(dtw::dtw_distance(seqs[i], seqs[j]));
      euc_vals.push_back(dtw::pointwise_euclidean(seqs[i], seqs[j], dtw_length));
      ++s.pairs;
    }
  s.dtw = coefficient_of_variation(dtw_vals);
  s.euclid = coefficient_of_variation(euc_vals);
  return s;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman needs two equally sized series of >= 2");
  return pearson(ranks(a), ranks(b));
}

CvStat coefficient_of_variation(const std::vector<double>& values) {
  CvStat out;
  if (values.size() < 2) throw std::invalid_argument("CV needs at least 2 values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (std::abs(mean) < 1e-12) {
    out.degenerate = true;
    return out;
  }
  out.cv = sd / mean;
  return out;
}

std::vector<core::TaskSpec> cv_tasks(core::EnvKind kind, int horizon) {
  const core::Vec lo = envs::hidden_param_range_lo(kind);
  const core::Vec hi = envs::hidden_param_range_hi(kind);
  const int dim = envs::hidden_param_dim(kind);
  std::vector<core::TaskSpec> tasks;
  for (int i = 0; i < 5; ++i) {
    core::TaskSpec t;
    t.kind = kind;
    t.horizon = horizon;
    t.hidden_param = core::Vec(dim);
    for (int d = 0; d < dim; ++d) t.hidden_param[d] = 0.5 * (lo[d] + hi[d]);
    if (dim > 0)
      t.hidden_param[0] = 0.9 * (lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / 4.0);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

CvReport cv_experiment(const std::vector<SkillCheckpoint>& ckpts, int dtw_length,
                       int meta_episodes, int max_attempts, std::uint64_t seed) {
  if (ckpts.empty()) throw std::invalid_argument("cv study needs at least one checkpoint");
  nn::Rng rng(seed);
  CvReport report;
  for (const SkillCheckpoint& c : ckpts) {
    CvKindReport kr;
    kr.kind = c.config.kind;
    const auto tasks = cv_tasks(c.config.kind, c.config.horizon);
    const bool wind_full = c.config.env.wind_full_state;

    // SAME scenario: 5 successes on the middle task.
    std::vector<dtw::StateSequence> same_seqs;
    for (int rep = 0; rep < 5; ++rep) {
      auto traj = collect_success(c, tasks[2], meta_episodes, max_attempts, rng);
      if (!traj)
        throw std::runtime_error(
            "cv study (" + core::to_string(kr.kind) + ", same-task): collected " +
            std::to_string(same_seqs.size()) + "/5 success trajectories; task theta=" +
            std::to_string(tasks[2].hidden_param.size() ? tasks[2].hidden_param[0] : 0.0) +
            " gave none in " + std::to_string(max_attempts) + " meta-tests");
      same_seqs.push_back(
          dtw::trajectory_to_sequence(*traj, kr.kind, dtw_length, wind_full));
    }
    kr.same = scenario_from(same_seqs, dtw_length);

    // NEIGHBOUR scenario: one success per evenly spaced task.
    std::vector<dtw::StateSequence> neigh_seqs;
    for (const auto& task : tasks) {
      auto traj = collect_success(c, task, meta_episodes, max_attempts, rng);
      if (!traj)
        throw std::runtime_error(
            "cv study (" + core::to_string(kr.kind) + ", neighbour-task): task theta=" +
            std::to_string(task.hidden_param.size() ? task.hidden_param[0] : 0.0) +
            " gave no success trajectory in " + std::to_string(max_attempts) +
            " meta-tests (" + std::to_string(neigh_seqs.size()) + "/5 collected)");
      neigh_seqs.push_back(
          dtw::trajectory_to_sequence(*traj, kr.kind, dtw_length, wind_full));
    }
    kr.neighbour = scenario_from(neigh_seqs, dtw_length);
    report.kinds.push_back(std::move(kr));
  }
  return report;
}

SweepReport smoothness_sweep(const std::vector<SkillCheckpoint>& ckpts,
                             const envs::CourseSpec& course, const hps::HpsConfig& hps_cfg,
                             int eval_tasks, int held_out_tasks, std::uint64_t seed) {
  if (ckpts.empty()) throw std::invalid_argument("sweep needs at least one checkpoint");
  nn::Rng rng(seed);
  SweepReport report;
  for (const SkillCheckpoint& c : ckpts) {
    SweepPoint p;
    p.beta = c.config.beta_smooth;
    const auto tasks = mlps::linspace_tasks(c.config.kind, eval_tasks, c.config.horizon);
    double successes = 0.0;
    for (const auto& task : tasks)
      successes += mlps::meta_test(c.policy, encoder_of(c), task, c.config.eval_episodes,
                                   c.config.env, rng)
                           .success
                       ? 1.0
                       : 0.0;
    p.meta_success = successes / static_cast<double>(tasks.size());
    report.points.push_back(p);
  }

  double lo = 1.0, hi = 0.0;
  for (const auto& p : report.points) {
    lo = std::min(lo, p.meta_success);
    hi = std::max(hi, p.meta_success);
  }
  if (hi - lo > 0.1)
    throw std::invalid_argument(
        "sweep refused: meta-test success gap " + std::to_string(hi - lo) +
        " exceeds 0.1; checkpoints are not performance-matched");

  for (std::size_t idx = 0; idx < ckpts.size(); ++idx) {
    const SkillCheckpoint& c = ckpts[idx];
    SweepPoint& p = report.points[idx];

    if (c.encoder) {
      nn::Rng held_rng(seed + 1);
      std::vector<core::TaskSpec> held;
      for (int i = 0; i < held_out_tasks; ++i)
        held.push_back(envs::sample_task(c.config.kind, held_rng, c.config.horizon));
      const mlps::SmoothnessReport sr = mlps::held_out_smoothness(
          c.policy, *c.encoder, held, c.config.kappa, c.config.dtw_length, c.config.env,
          c.config.eval_episodes, held_rng);
      p.smoothness = sr.normalized;
    }

    mlps::SkillLibrary lib;
    {
      mlps::SkillEntry entry;
      entry.name = core::to_string(c.config.kind);
      entry.kind = c.config.kind;
      entry.policy = c.policy;
      entry.encoder = c.encoder;
      entry.d_z = c.config.d_z;
      entry.skill_horizon = course.skill_horizon;
      entry.bounds_lo = c.bounds_lo;
      entry.bounds_hi = c.bounds_hi;
      lib.params = course.params;
      lib.entries.push_back(std::move(entry));
    }
    const hps::HpsResult trained = hps::hps_train(course, lib, hps_cfg);
    const hps::CourseEval ev =
        hps::evaluate_course(trained.agent, lib, course, 20, rng);
    p.course_success = ev.success_rate;
  }

  if (report.points.size() >= 3) {
    std::vector<double> smooth, succ;
    for (const auto& p : report.points) {
      smooth.push_back(p.smoothness);
      succ.push_back(p.course_success);
    }
    report.rho = spearman(smooth, succ);
    report.asserted = true;
  }
  return report;
}

std::vector<core::Vec> collect_z_samples(const SkillCheckpoint& ckpt, int num_samples,
                                         int meta_episodes, std::uint64_t seed) {
  if (!ckpt.encoder) throw std::invalid_argument("checkpoint has no encoder (d_z = 0)");
  nn::Rng rng(seed);
  std::vector<core::Vec> samples;
  while (static_cast<int>(samples.size()) < num_samples) {
    const core::TaskSpec task =
        envs::sample_task(ckpt.config.kind, rng, ckpt.config.horizon);
    const mlps::MetaTestResult r = mlps::meta_test(ckpt.policy, &*ckpt.encoder, task,
                                                   meta_episodes, ckpt.config.env, rng);
    samples.push_back(r.z_final);
  }
  return samples;
}

std::vector<EmbeddingRow> export_embeddings(const SkillCheckpoint& ckpt, int num_tasks,
                                            int meta_episodes, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::vector<EmbeddingRow> rows;
  const auto tasks = mlps::linspace_tasks(ckpt.config.kind, num_tasks, ckpt.config.horizon);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const mlps::MetaTestResult r = mlps::meta_test(
        ckpt.policy, encoder_of(ckpt), tasks[i], meta_episodes, ckpt.config.env, rng);
    EmbeddingRow row;
    row.task = static_cast<int>(i);
    row.theta = tasks[i].hidden_param.size() ? tasks[i].hidden_param[0] : 0.0;
    row.z = r.z_final;
    row.success = r.success;
    rows.push_back(std::move(row));
  }
  return rows;
}

envs::CourseSpec make_mixed_course(const envs::EnvParams& params, int skill_horizon) {
  envs::CourseSpec course;
  course.params = params;
  course.skill_horizon = skill_horizon;
  auto barrier = [&](core::EnvKind kind, std::initializer_list<double> theta) {
    core::TaskSpec t;
    t.kind = kind;
    t.horizon = skill_horizon;
    t.hidden_param = core::Vec(static_cast<long>(theta.size()));
    long i = 0;
    for (double v : theta) t.hidden_param[i++] = v;
    course.barriers.push_back(std::move(t));
  };
  barrier(core::EnvKind::Door, {2.5});
  barrier(core::EnvKind::Wind, {0.5});
  barrier(core::EnvKind::GatherOne, {-2.0});
  barrier(core::EnvKind::Door, {-3.5});
  barrier(core::EnvKind::Wind, {-0.5});
  envs::validate_course(course);
  return course;
}

}  // namespace psl::harness
