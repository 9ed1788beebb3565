#pragma once

#include "psl/harness/checkpoint.hpp"

namespace psl::harness {

// Spearman rank correlation; ties get averaged ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Coefficient of variation: sample standard deviation over mean.
// degenerate marks a zero mean (identical trajectories).
struct CvStat {
  double cv = 0.0;
  bool degenerate = false;
};
CvStat coefficient_of_variation(const std::vector<double>& values);

struct CvScenario {
  CvStat dtw, euclid;
  int pairs = 0;
};
struct CvKindReport {
  core::EnvKind kind = core::EnvKind::Door;
  CvScenario same;       // repeated successes on the middle task
  CvScenario neighbour;  // one success per evenly spaced task
};
struct CvReport {
  std::vector<CvKindReport> kinds;
};

// Distance-metric stability study over success trajectories: 5 evenly
// spaced hidden parameters per kind, 10 distance pairs per scenario, CV of
// DTW against pointwise Euclidean. Throws listing the shortfall when a task
// cannot produce enough successes within max_attempts meta-tests.
CvReport cv_experiment(const std::vector<SkillCheckpoint>& ckpts, int dtw_length,
                       int meta_episodes, int max_attempts, std::uint64_t seed);

// The 5 CV-study tasks: dimension 0 evenly spaced over the central 90% of
// the hidden range, remaining dimensions at midpoint.
std::vector<core::TaskSpec> cv_tasks(core::EnvKind kind, int horizon);

struct SweepPoint {
  double beta = 0.0;
  double meta_success = 0.0;
  double smoothness = 0.0;  // normalized held-out residual
  double course_success = 0.0;
};
struct SweepReport {
  std::vector<SweepPoint> points;
  double rho = 0.0;  // Spearman(smoothness, course_success)
  bool asserted = false;
};

// Smoothness-vs-performance sweep: each checkpoint (same skill family,
// different beta) trains an HPS agent on the fixed course; reports
// (normalized smoothness residual, final course success) pairs and their
// rank correlation. Checkpoints whose meta-test success differs by more
// than 0.1 are refused.
SweepReport smoothness_sweep(const std::vector<SkillCheckpoint>& ckpts,
                             const envs::CourseSpec& course, const hps::HpsConfig& hps_cfg,
                             int eval_tasks, int held_out_tasks, std::uint64_t seed);

// Posterior-mean embeddings from meta-tests; the z sample pool for the
// bounds pass.
std::vector<core::Vec> collect_z_samples(const SkillCheckpoint& ckpt, int num_samples,
                                         int meta_episodes, std::uint64_t seed);

struct EmbeddingRow {
  int task = 0;
  double theta = 0.0;
  core::Vec z;
  bool success = false;
};
std::vector<EmbeddingRow> export_embeddings(const SkillCheckpoint& ckpt, int num_tasks,
                                            int meta_episodes, std::uint64_t seed);

// Fixed 5-barrier mixed course used by the packaged course experiment:
// door, wind, gather-one, door, wind with pinned hidden parameters.
envs::CourseSpec make_mixed_course(const envs::EnvParams& params, int skill_horizon);

}  // namespace psl::harness
