#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "psl/core/serialize.hpp"
#include "psl/harness/experiments.hpp"
#include "psl/harness/metrics.hpp"

namespace {

using namespace psl;
using harness::json;

// Exit code 3: a packaged experiment ran but its directional assertion
// failed.
struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json maybe_config(const std::string& path) {
  return path.empty() ? json::object() : harness::load_json_file(path);
}

void write_embedding_csv(const std::string& path,
                         const std::vector<harness::EmbeddingRow>& rows, int d_z) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "task,theta";
  for (int i = 0; i < d_z; ++i) out << ",z" << i;
  out << ",success\n";
  for (const auto& r : rows) {
    out << r.task << "," << r.theta;
    for (long i = 0; i < r.z.size(); ++i) out << "," << r.z[i];
    out << "," << (r.success ? 1 : 0) << "\n";
  }
}

int cmd_train_skill(const std::string& config_path, std::uint64_t seed,
                    std::string out_dir) {
  json j = maybe_config(config_path);
  j["seed"] = seed;
  mlps::MlpsConfig cfg = harness::mlps_config_from_json(j);
  if (out_dir.empty())
    out_dir = harness::run_directory("train-skill-" + core::to_string(cfg.kind), seed);
  harness::ensure_directory(out_dir);
  harness::write_json_file(out_dir + "/config.json", harness::to_json(cfg));
  harness::log_note(out_dir, "train-skill started");

  harness::MetricsWriter metrics(out_dir + "/metrics.jsonl");
  cfg.on_metrics = [&metrics](const mlps::MlpsMetricsRow& row) {
    metrics.write(row.env_steps, harness::mlps_row_to_json(row));
    std::cout << "steps " << row.env_steps << " eval_success " << row.eval_success
              << " eval_return " << row.eval_return << std::endl;
  };
  const mlps::MlpsArtifacts art = mlps::mlps_train(cfg);

  harness::SkillCheckpoint ckpt;
  ckpt.config = art.config;
  ckpt.policy = art.policy;
  ckpt.encoder = art.encoder;
  ckpt.encoder_target = art.encoder_target;
  ckpt.sim = art.sim;
  harness::save_skill_checkpoint(out_dir + "/checkpoint", ckpt);
  harness::log_note(out_dir, "train-skill finished after " +
                                 std::to_string(art.env_steps) + " env steps");
  std::cout << "checkpoint: " << out_dir << "/checkpoint\n";
  if (!art.metrics.empty())
    std::cout << "final eval success: " << art.metrics.back().eval_success << "\n";
  return 0;
}

int cmd_meta_test(const std::string& ckpt_dir, int tasks, int episodes,
                  std::uint64_t seed, const std::string& out_path) {
  const harness::SkillCheckpoint ckpt = harness::load_skill_checkpoint(ckpt_dir);
  const auto rows = harness::export_embeddings(ckpt, tasks, episodes, seed);
  double successes = 0;
  for (const auto& r : rows) successes += r.success ? 1 : 0;
  if (!out_path.empty()) write_embedding_csv(out_path, rows, ckpt.config.d_z);
  std::cout << "task,theta,z,success\n";
  for (const auto& r : rows) {
    std::cout << r.task << "," << r.theta << ",\"";
    for (long i = 0; i < r.z.size(); ++i) std::cout << (i ? ";" : "") << r.z[i];
    std::cout << "\"," << (r.success ? 1 : 0) << "\n";
  }
  std::cout << "success rate: " << successes / rows.size() << "\n";
  return 0;
}

int cmd_bounds(const std::string& ckpt_dir, double t, int samples, int episodes,
               std::uint64_t seed) {
  harness::SkillCheckpoint ckpt = harness::load_skill_checkpoint(ckpt_dir);
  if (ckpt.config.d_z == 0) {
    std::cout << "skill has no continuous parameter; bounds are empty\n";
    ckpt.bounds_lo = core::Vec(0);
    ckpt.bounds_hi = core::Vec(0);
    ckpt.bounds_t = t;
    harness::save_skill_checkpoint(ckpt_dir, ckpt);
    return 0;
  }
  const auto zs = harness::collect_z_samples(ckpt, samples, episodes, seed);
  const mlps::ActionBounds b = mlps::compute_action_bounds(zs, t);
  if (b.degenerate_dims > 0)
    std::cerr << "warning: " << b.degenerate_dims
              << " degenerate dimension(s) widened by 1e-6\n";
  ckpt.bounds_lo = b.lo;
  ckpt.bounds_hi = b.hi;
  ckpt.bounds_t = t;
  harness::save_skill_checkpoint(ckpt_dir, ckpt);
  std::ofstream zf(ckpt_dir + "/z_samples.tsv");
  for (const auto& z : zs) {
    for (long i = 0; i < z.size(); ++i) zf << (i ? "\t" : "") << z[i];
    zf << "\n";
  }
  for (long i = 0; i < b.lo.size(); ++i)
    std::cout << "dim " << i << ": [" << b.lo[i] << ", " << b.hi[i] << "]\n";
  return 0;
}

int cmd_train_course(const std::string& config_path, const std::string& course_path,
                     const std::vector<std::string>& skill_dirs, std::uint64_t seed,
                     std::string out_dir) {
  json j = maybe_config(config_path);
  j["seed"] = seed;
  hps::HpsConfig cfg = harness::hps_config_from_json(j);
  const mlps::SkillLibrary lib = harness::library_from_checkpoints(skill_dirs, 40);
  envs::CourseSpec course;
  if (course_path.empty())
    course = harness::make_mixed_course(lib.params, lib.entries.front().skill_horizon);
  else
    course = harness::course_from_json(harness::load_json_file(course_path));

  if (out_dir.empty()) out_dir = harness::run_directory("train-course", seed);
  harness::ensure_directory(out_dir);
  harness::write_json_file(out_dir + "/config.json", harness::to_json(cfg));
  harness::write_json_file(out_dir + "/course.json", harness::to_json(course));
  harness::log_note(out_dir, "train-course started");

  harness::MetricsWriter metrics(out_dir + "/metrics.jsonl");
  cfg.on_metrics = [&metrics](const hps::HpsMetricsRow& row) {
    metrics.write(row.high_steps, harness::hps_row_to_json(row));
    std::cout << "high_steps " << row.high_steps << " eval_success " << row.eval_success
              << std::endl;
  };
  const hps::HpsResult result = hps::hps_train(course, lib, cfg);

  harness::AgentCheckpoint ckpt;
  ckpt.config = cfg;
  ckpt.course = course;
  ckpt.agent = result.agent;
  harness::save_agent_checkpoint(out_dir + "/checkpoint", ckpt, lib);
  harness::log_note(out_dir, "train-course finished after " +
                                 std::to_string(result.high_steps) + " high-level steps");
  if (!result.metrics.empty())
    std::cout << "final eval success: " << result.metrics.back().eval_success << "\n";
  return 0;
}

int cmd_eval_course(const std::string& agent_dir,
                    const std::vector<std::string>& skill_dirs, int episodes,
                    std::uint64_t seed) {
  const mlps::SkillLibrary lib = harness::library_from_checkpoints(skill_dirs, 40);
  const harness::AgentCheckpoint ckpt = harness::load_agent_checkpoint(agent_dir, lib);
  nn::Rng rng(seed);
  const hps::CourseEval ev =
      hps::evaluate_course(ckpt.agent, lib, ckpt.course, episodes, rng);
  std::cout << "success rate: " << ev.success_rate << "\n"
            << "mean return: " << ev.mean_return << "\n"
            << "mean barriers passed: " << ev.mean_barriers << "\n";
  return 0;
}

int cmd_cv_experiment(const std::vector<std::string>& ckpt_dirs, std::uint64_t seed,
                      const std::string& out_path) {
  std::vector<harness::SkillCheckpoint> ckpts;
  for (const auto& d : ckpt_dirs) ckpts.push_back(harness::load_skill_checkpoint(d));
  const harness::CvReport report = harness::cv_experiment(ckpts, 40, 3, 40, seed);
  json out = json::array();
  auto fmt = [](const harness::CvStat& s) {
    return s.degenerate ? std::string("degenerate") : std::to_string(s.cv);
  };
  std::cout << "kind  same:CV(DTW)  same:CV(Euclid)  neigh:CV(DTW)  neigh:CV(Euclid)\n";
  for (const auto& k : report.kinds) {
    std::cout << core::to_string(k.kind) << "  " << fmt(k.same.dtw) << "  "
              << fmt(k.same.euclid) << "  " << fmt(k.neighbour.dtw) << "  "
              << fmt(k.neighbour.euclid) << "\n";
    out.push_back(json{{"kind", core::to_string(k.kind)},
                       {"same_dtw", k.same.dtw.cv},
                       {"same_dtw_degenerate", k.same.dtw.degenerate},
                       {"same_euclid", k.same.euclid.cv},
                       {"same_euclid_degenerate", k.same.euclid.degenerate},
                       {"neighbour_dtw", k.neighbour.dtw.cv},
                       {"neighbour_euclid", k.neighbour.euclid.cv}});
  }
  if (!out_path.empty()) harness::write_json_file(out_path, out);
  return 0;
}

int cmd_smoothness_sweep(const std::vector<std::string>& ckpt_dirs,
                         const std::string& course_path, const std::string& hps_path,
                         std::uint64_t seed, const std::string& out_path) {
  std::vector<harness::SkillCheckpoint> ckpts;
  for (const auto& d : ckpt_dirs) ckpts.push_back(harness::load_skill_checkpoint(d));
  const hps::HpsConfig hps_cfg = harness::hps_config_from_json(maybe_config(hps_path));

  envs::CourseSpec course;
  if (course_path.empty()) {
    // Single-family fallback: three barriers of the first checkpoint's kind.
    const auto kind = ckpts.front().config.kind;
    const core::Vec hi = envs::hidden_param_range_hi(kind);
    course.params = ckpts.front().config.env;
    course.skill_horizon = ckpts.front().config.horizon;
    for (double f : {0.5, -0.6, 0.1}) {
      core::TaskSpec t;
      t.kind = kind;
      t.horizon = course.skill_horizon;
      t.hidden_param = core::Vec(envs::hidden_param_dim(kind));
      for (long i = 0; i < t.hidden_param.size(); ++i) t.hidden_param[i] = f * hi[i];
      course.barriers.push_back(std::move(t));
    }
    envs::validate_course(course);
  } else {
    course = harness::course_from_json(harness::load_json_file(course_path));
  }

  const harness::SweepReport report =
      harness::smoothness_sweep(ckpts, course, hps_cfg, 20, 10, seed);
  std::cout << "beta  meta_success  smoothness  course_success\n";
  json points = json::array();
  for (const auto& p : report.points) {
    std::cout << p.beta << "  " << p.meta_success << "  " << p.smoothness << "  "
              << p.course_success << "\n";
    points.push_back(json{{"beta", p.beta},
                          {"meta_success", p.meta_success},
                          {"smoothness", p.smoothness},
                          {"course_success", p.course_success}});
  }
  if (report.asserted) std::cout << "spearman rho: " << report.rho << "\n";
  if (!out_path.empty())
    harness::write_json_file(
        out_path, json{{"points", points}, {"rho", report.rho}, {"asserted", report.asserted}});
  if (report.asserted && report.rho > 0.0)
    throw AssertionFailure("smoothness sweep: expected rank correlation <= 0, got " +
                           std::to_string(report.rho));
  return 0;
}

int cmd_dtw_matrix(const std::string& input, const std::string& kind_name, int L) {
  const auto kind = core::env_kind_from_string(kind_name);
  const auto trajectories = core::read_trajectories_file(input);
  std::vector<dtw::StateSequence> seqs;
  for (const auto& t : trajectories)
    seqs.push_back(dtw::trajectory_to_sequence(t, kind, L));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t j = 0; j < seqs.size(); ++j)
      std::cout << (j ? "\t" : "") << dtw::dtw_distance(seqs[i], seqs[j]);
    std::cout << "\n";
  }
  return 0;
}

int cmd_describe_env(const std::string& kind_name, const std::string& config_path) {
  const auto kind = core::env_kind_from_string(kind_name);
  envs::EnvParams p;
  if (!config_path.empty())
    p = harness::env_params_from_json(harness::load_json_file(config_path));
  const int dim = envs::hidden_param_dim(kind);
  std::cout << "kind: " << core::to_string(kind) << "\n";
  std::cout << "hidden parameter dim: " << dim << "\n";
  if (dim > 0) {
    const core::Vec lo = envs::hidden_param_range_lo(kind);
    const core::Vec hi = envs::hidden_param_range_hi(kind);
    for (int i = 0; i < dim; ++i)
      std::cout << "  theta[" << i << "] in [" << lo[i] << ", " << hi[i] << "]\n";
  }
  std::cout << "segment length: " << p.segment_length << "\n"
            << "observation: (x, y - L/2, stage, vx, vy), dim "
            << envs::PointEnv::observation_dim() << "\n"
            << "action: 2-dim in [-1, 1], displacement scale " << p.step_scale << "\n"
            << "dynamics noise std: " << p.noise_std << "\n"
            << "stage event reward: +10, goal reward: +20, goal radius " << p.goal_radius
            << "\n"
            << "course rewards: +5 per barrier crossed, +100 at the final goal\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameterized-skill lab: skill meta-training, hierarchical course "
               "training, and packaged analysis experiments"};
  app.require_subcommand(1);

  std::string config_path, course_path, out_dir, out_path, ckpt_dir, agent_dir,
      kind_name, input_path, hps_path;
  std::vector<std::string> ckpt_dirs, skill_dirs;
  std::uint64_t seed = 0;
  int tasks = 40, episodes = 3, samples = 100, L = 40;
  double t_pct = 90.0;

  auto* train_skill = app.add_subcommand("train-skill", "Meta-train one skill family");
  train_skill->add_option("--config", config_path, "JSON config file");
  train_skill->add_option("--seed", seed, "Training seed")->required();
  train_skill->add_option("--out", out_dir, "Output directory");

  auto* meta_test = app.add_subcommand("meta-test", "Meta-test a skill checkpoint");
  meta_test->add_option("--checkpoint", ckpt_dir)->required();
  meta_test->add_option("--tasks", tasks);
  meta_test->add_option("--episodes", episodes);
  meta_test->add_option("--seed", seed)->required();
  meta_test->add_option("--out", out_path, "CSV output path");

  auto* export_emb = app.add_subcommand("export-embeddings",
                                        "CSV of (task, theta, z, success)");
  export_emb->add_option("--checkpoint", ckpt_dir)->required();
  export_emb->add_option("--tasks", tasks);
  export_emb->add_option("--episodes", episodes);
  export_emb->add_option("--seed", seed)->required();
  export_emb->add_option("--out", out_path)->required();

  auto* bounds = app.add_subcommand("bounds", "Compute and store z action bounds");
  bounds->add_option("--checkpoint", ckpt_dir)->required();
  bounds->add_option("--t", t_pct, "Central range percentage");
  bounds->add_option("--samples", samples);
  bounds->add_option("--episodes", episodes);
  bounds->add_option("--seed", seed)->required();

  auto* train_course = app.add_subcommand("train-course", "Train HPS on a course");
  train_course->add_option("--config", config_path);
  train_course->add_option("--course", course_path, "Course JSON (default: mixed 5-barrier)");
  train_course->add_option("--skills", skill_dirs, "Skill checkpoint directories")
      ->required();
  train_course->add_option("--seed", seed)->required();
  train_course->add_option("--out", out_dir);

  auto* eval_course = app.add_subcommand("eval-course", "Evaluate an agent checkpoint");
  eval_course->add_option("--agent", agent_dir)->required();
  eval_course->add_option("--skills", skill_dirs)->required();
  eval_course->add_option("--episodes", episodes);
  eval_course->add_option("--seed", seed)->required();

  auto* cv = app.add_subcommand("cv-experiment", "DTW vs Euclidean stability study");
  cv->add_option("--checkpoints", ckpt_dirs)->required();
  cv->add_option("--seed", seed)->required();
  cv->add_option("--out", out_path);

  auto* sweep = app.add_subcommand("smoothness-sweep",
                                   "Smoothness residual vs course success");
  sweep->add_option("--checkpoints", ckpt_dirs)->required();
  sweep->add_option("--course", course_path);
  sweep->add_option("--hps-config", hps_path);
  sweep->add_option("--seed", seed)->required();
  sweep->add_option("--out", out_path);

  auto* dtw_matrix = app.add_subcommand("dtw-matrix", "Pairwise DTW of stored trajectories");
  dtw_matrix->add_option("--input", input_path, "Trajectory TSV file")->required();
  dtw_matrix->add_option("--kind", kind_name)->required();
  dtw_matrix->add_option("--length", L);

  auto* describe = app.add_subcommand("describe-env", "Print environment constants");
  describe->add_option("--kind", kind_name)->required();
  describe->add_option("--config", config_path, "Env params JSON");

  try {
    app.parse(argc, argv);
    if (train_skill->parsed()) return cmd_train_skill(config_path, seed, out_dir);
    if (meta_test->parsed()) return cmd_meta_test(ckpt_dir, tasks, episodes, seed, out_path);
    if (export_emb->parsed()) {
      const auto ckpt = psl::harness::load_skill_checkpoint(ckpt_dir);
      write_embedding_csv(out_path,
                          psl::harness::export_embeddings(ckpt, tasks, episodes, seed),
                          ckpt.config.d_z);
      return 0;
    }
    if (bounds->parsed()) return cmd_bounds(ckpt_dir, t_pct, samples, episodes, seed);
    if (train_course->parsed())
      return cmd_train_course(config_path, course_path, skill_dirs, seed, out_dir);
    if (eval_course->parsed())
      return cmd_eval_course(agent_dir, skill_dirs, episodes, seed);
    if (cv->parsed()) return cmd_cv_experiment(ckpt_dirs, seed, out_path);
    if (sweep->parsed())
      return cmd_smoothness_sweep(ckpt_dirs, course_path, hps_path, seed, out_path);
    if (dtw_matrix->parsed()) return cmd_dtw_matrix(input_path, kind_name, L);
    if (describe->parsed()) return cmd_describe_env(kind_name, config_path);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failed: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
