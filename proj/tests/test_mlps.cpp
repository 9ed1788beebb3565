#include <doctest.h>

#include <cmath>

#include "psl/mlps/skill_library.hpp"
#include "psl/mlps/losses.hpp"
#include "psl/mlps/trainer.hpp"

using namespace psl::mlps;
using psl::core::EnvKind;
using psl::core::Transition;

namespace {

std::vector<Transition> make_batch(int n, Rng& rng) {
  std::vector<Transition> batch;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.state = psl::nn::sample_standard_normal(psl::core::kFullStateDim, rng);
    t.action = 0.5 * psl::nn::sample_standard_normal(2, rng);
    t.reward = static_cast<double>(i);
    t.next_state = psl::nn::sample_standard_normal(psl::core::kFullStateDim, rng);
    t.done = false;
    batch.push_back(std::move(t));
  }
  return batch;
}

// Encoder whose factors are fixed: zero weights, bias sets the per-factor
// mean and log-variance directly.
ContextEncoder constant_encoder(double mu, double log_var, int d_z, Rng& rng) {
  ContextEncoder enc = make_context_encoder(EnvKind::Door, d_z, {8}, rng);
  enc.net.for_each_param([](psl::nn::Param& p) { p.value.setZero(); });
  auto& bias = enc.net.biases.back().value;
  for (int i = 0; i < d_z; ++i) {
    bias(0, i) = mu;
    bias(0, d_z + i) = log_var;
  }
  return enc;
}

}  // namespace

TEST_CASE("empty context falls back to the unit prior") {
  Rng rng(1);
  const ContextEncoder enc = make_context_encoder(EnvKind::Door, 2, {8}, rng);
  const Posterior p = encode_context(enc, {});
  CHECK(p.from_prior);
  CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.var - Vec::Ones(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("posterior precision is prior plus summed factor precisions") {
  Rng rng(2);
  const double mu = 0.3, lv = 0.5;
  const ContextEncoder enc = constant_encoder(mu, lv, 2, rng);
  for (int n : {1, 3, 7}) {
    const auto batch = make_batch(n, rng);
    const Posterior p = encode_context(enc, batch);
    const double prec = 1.0 + n * std::exp(-lv);
    const double mean = n * std::exp(-lv) * mu / prec;
    for (int d = 0; d < 2; ++d) {
      CHECK(p.var[d] == doctest::Approx(1.0 / prec).epsilon(1e-12));
      CHECK(p.mean[d] == doctest::Approx(mean).epsilon(1e-12));
    }
  }
  // Unit-variance factors halve the variance with one observation.
  const Posterior half = encode_context(constant_encoder(0.0, 0.0, 2, rng), make_batch(1, rng));
  CHECK(half.var[0] == doctest::Approx(0.5));
}

TEST_CASE("posterior variance shrinks monotonically with more context") {
  Rng rng(3);
  const ContextEncoder enc = make_context_encoder(EnvKind::Door, 2, {16, 16}, rng);
  auto batch = make_batch(1, rng);
  Posterior prev = encode_context(enc, batch);
  for (int n = 2; n <= 10; ++n) {
    const auto extra = make_batch(1, rng);
    batch.push_back(extra.front());
    const Posterior cur = encode_context(enc, batch);
    for (int d = 0; d < 2; ++d) CHECK(cur.var[d] < prev.var[d]);
    prev = cur;
  }
}

TEST_CASE("tape encoder agrees with the tape-free posterior") {
  Rng rng(4);
  ContextEncoder enc = make_context_encoder(EnvKind::Door, 2, {16}, rng);
  const auto batch = make_batch(5, rng);
  const Posterior p = encode_context(enc, batch);

  Tape tape;
  const Vec noise = psl::nn::sample_standard_normal(2, rng);
  const PosteriorNodes nodes = encode_context_tape(tape, enc, batch, noise);
  for (int d = 0; d < 2; ++d) {
    CHECK(tape.val(nodes.mean)(0, d) == doctest::Approx(p.mean[d]).epsilon(1e-10));
    CHECK(tape.val(nodes.var)(0, d) == doctest::Approx(p.var[d]).epsilon(1e-10));
    const double expect = p.mean[d] + std::sqrt(p.var[d]) * noise[d];
    CHECK(tape.val(nodes.sample)(0, d) == doctest::Approx(expect).epsilon(1e-10));
  }

  // KL to the unit prior: 0.5 * sum(m^2 + v - log v - 1).
  const Tape::Id kl = kl_to_prior(tape, nodes);
  double expect_kl = 0.0;
  for (int d = 0; d < 2; ++d)
    expect_kl += 0.5 * (p.mean[d] * p.mean[d] + p.var[d] - std::log(p.var[d]) - 1.0);
  CHECK(tape.val(kl)(0, 0) == doctest::Approx(expect_kl).epsilon(1e-10));

  // KL of the prior itself is zero.
  Tape t2;
  ContextEncoder prior_enc = constant_encoder(0.0, 40.0, 2, rng);  // huge factor var
  const PosteriorNodes pn = encode_context_tape(t2, prior_enc, make_batch(1, rng), noise);
  CHECK(t2.val(kl_to_prior(t2, pn))(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("smoothness loss hand values") {
  Tape tape;
  Mat z(2, 2);
  z << 0.0, 0.0, 3.0, 0.0;
  Mat targets(2, 2);
  targets << 0.0, 0.0, 3.0, 0.0;  // identical pairs, zero distance mismatch
  Eigen::VectorXd d0(2);
  d0 << 0.0, 0.0;
  const auto zero = smoothness_loss(tape, tape.constant(z), targets, d0, 0.5);
  CHECK(tape.val(zero)(0, 0) == doctest::Approx(0.0));

  // Pair residuals 1 and 3 -> mean of squares (1 + 9) / 2 = 5.
  Mat a(2, 2), b(2, 2);
  a << 0, 0, 0, 0;
  b << 2, 0, 0, 4;
  Eigen::VectorXd dtw(2);
  dtw << 2.0, 2.0;  // kappa 0.5 -> scaled 1: residuals |2|-1=1, |4|-1=3
  const auto five = smoothness_loss(tape, tape.constant(a), b, dtw, 0.5);
  CHECK(tape.val(five)(0, 0) == doctest::Approx(5.0));

  // Plain evaluator agrees.
  std::vector<Eigen::VectorXd> za{a.row(0).transpose(), a.row(1).transpose()};
  std::vector<Eigen::VectorXd> zb{b.row(0).transpose(), b.row(1).transpose()};
  CHECK(smoothness_residual(za, zb, dtw, 0.5) == doctest::Approx(5.0));
}

TEST_CASE("info nce hand values and tape agreement") {
  Rng rng(5);
  BilinearSimilarity sim = make_bilinear(2, rng);
  sim.w.value = Mat::Identity(2, 2);

  Tape tape;
  const Mat eye = Mat::Identity(2, 2);
  const auto loss = info_nce_loss(tape, tape.constant(eye), eye, sim);
  const double expect = -1.0 + std::log(std::exp(1.0) + 1.0) - std::log(2.0);
  CHECK(tape.val(loss)(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(info_nce_value(eye, eye, sim.w.value) == doctest::Approx(expect).epsilon(1e-12));

  // Zero similarity scores make the loss exactly zero.
  sim.w.value.setZero();
  Tape t2;
  CHECK(t2.val(info_nce_loss(t2, t2.constant(eye), eye, sim))(0, 0) ==
        doctest::Approx(0.0));

  // Random case: tape value equals the plain evaluator.
  sim.w.value = psl::nn::sample_standard_normal(2, 2, rng);
  const Mat anchors = psl::nn::sample_standard_normal(5, 2, rng);
  const Mat targets = psl::nn::sample_standard_normal(5, 2, rng);
  Tape t3;
  CHECK(t3.val(info_nce_loss(t3, t3.constant(anchors), targets, sim))(0, 0) ==
        doctest::Approx(info_nce_value(anchors, targets, sim.w.value)).epsilon(1e-10));

  Tape t4;
  const Mat one = Mat::Ones(1, 2);
  CHECK_THROWS_AS(info_nce_loss(t4, t4.constant(one), one, sim), std::invalid_argument);
}

TEST_CASE("critic targets bootstrap through the frozen target critics") {
  Rng rng(6);
  SkillPolicy policy = make_skill_policy(psl::core::kFullStateDim, 2, 2, {8}, rng);
  // Constant target critics: Q1 = 2, Q2 = 3, so min is 2 regardless of input.
  policy.target1.for_each_param([](psl::nn::Param& p) { p.value.setZero(); });
  policy.target2.for_each_param([](psl::nn::Param& p) { p.value.setZero(); });
  policy.target1.biases.back().value(0, 0) = 2.0;
  policy.target2.biases.back().value(0, 0) = 3.0;

  auto batch = make_batch(4, rng);
  batch[2].done = true;

  SacConfig cfg;
  cfg.alpha_ent = 0.0;
  const Vec z = Vec::Zero(2);

  const Eigen::VectorXd y = critic_targets(policy, z, batch, cfg, rng);
  for (int i = 0; i < 4; ++i) {
    const double expect = batch[static_cast<std::size_t>(i)].reward +
                          (batch[static_cast<std::size_t>(i)].done ? 0.0 : cfg.gamma * 2.0);
    CHECK(y[i] == doctest::Approx(expect).epsilon(1e-12));
  }

  cfg.gamma = 0.0;
  const Eigen::VectorXd y0 = critic_targets(policy, z, batch, cfg, rng);
  for (int i = 0; i < 4; ++i)
    CHECK(y0[i] == doctest::Approx(batch[static_cast<std::size_t>(i)].reward));
}

TEST_CASE("critic loss decreases under repeated sac updates") {
  Rng rng(7);
  SkillPolicy policy = make_skill_policy(psl::core::kFullStateDim, 2, 0, {16}, rng);
  const auto batch = make_batch(32, rng);
  SacConfig cfg;
  cfg.adam.lr = 1e-3;
  const double first = sac_update(policy, Vec(0), batch, cfg, rng);
  double last = first;
  for (int i = 0; i < 200; ++i) last = sac_update(policy, Vec(0), batch, cfg, rng);
  CHECK(last < first);
}

TEST_CASE("compute action bounds uses interpolated percentiles") {
  std::vector<Vec> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(Vec::Constant(1, static_cast<double>(i)));
  const ActionBounds b = compute_action_bounds(samples, 90.0);
  CHECK(b.lo[0] == doctest::Approx(4.95));
  CHECK(b.hi[0] == doctest::Approx(94.05));
  CHECK(b.degenerate_dims == 0);

  std::vector<Vec> flat(25, Vec::Constant(2, 1.5));
  const ActionBounds w = compute_action_bounds(flat, 95.0);
  CHECK(w.degenerate_dims == 2);
  CHECK(w.lo[0] == doctest::Approx(1.5 - 1e-6));
  CHECK(w.hi[1] == doctest::Approx(1.5 + 1e-6));

  CHECK_THROWS_AS(compute_action_bounds(samples, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_action_bounds(samples, 89.0), std::invalid_argument);
  samples.resize(19);
  CHECK_THROWS_AS(compute_action_bounds(samples, 90.0), std::invalid_argument);
}

TEST_CASE("meta test is reproducible for a fixed rng state") {
  Rng rng(8);
  SkillPolicy policy = make_skill_policy(psl::core::kFullStateDim, 2, 2, {8}, rng);
  ContextEncoder enc = make_context_encoder(EnvKind::Door, 2, {8}, rng);
  psl::core::TaskSpec task;
  task.kind = EnvKind::Door;
  task.horizon = 20;
  task.hidden_param = Vec::Constant(1, 1.0);
  psl::envs::EnvParams env;

  Rng ra(99), rb(99);
  const MetaTestResult a = meta_test(policy, &enc, task, 3, env, ra);
  const MetaTestResult b = meta_test(policy, &enc, task, 3, env, rb);
  REQUIRE(a.trajectories.size() == 3);
  CHECK((a.z_final - b.z_final).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.episode_return == b.episode_return);
}

TEST_CASE("linspace tasks cover the range with fixed midpoints") {
  const auto tasks = linspace_tasks(EnvKind::Door, 5, 40);
  REQUIRE(tasks.size() == 5);
  const double expect[] = {-5.0, -2.5, 0.0, 2.5, 5.0};
  for (int i = 0; i < 5; ++i) CHECK(tasks[static_cast<std::size_t>(i)].hidden_param[0] ==
                                    doctest::Approx(expect[i]));
  const auto two = linspace_tasks(EnvKind::GatherTwo, 3, 40);
  CHECK(two[0].hidden_param[1] == doctest::Approx(0.0));  // non-swept dims at midpoint
}

TEST_CASE("library validation names the offending skill") {
  Rng rng(9);
  SkillLibrary lib;
  CHECK_THROWS_AS(validate_library(lib), std::invalid_argument);

  SkillEntry e;
  e.name = "door";
  e.kind = EnvKind::Door;
  e.policy = make_skill_policy(psl::core::kFullStateDim, 2, 2, {8}, rng);
  e.encoder = make_context_encoder(EnvKind::Door, 2, {8}, rng);
  e.d_z = 2;
  e.bounds_lo = Vec::Constant(2, -1.0);
  e.bounds_hi = Vec::Constant(2, 1.0);
  lib.entries.push_back(e);
  CHECK_NOTHROW(validate_library(lib));
  CHECK(lib.max_dz() == 2);
  CHECK_THROWS_AS(lib.at(1), std::out_of_range);

  lib.entries[0].bounds_hi[0] = -2.0;  // lo >= hi
  CHECK_THROWS_WITH_AS(validate_library(lib),
                       doctest::Contains("door"), std::invalid_argument);
  lib.entries[0].bounds_hi = Vec::Constant(1, 1.0);  // wrong size
  CHECK_THROWS_AS(validate_library(lib), std::invalid_argument);
  lib.entries[0].bounds_hi = Vec::Constant(2, 1.0);
  lib.entries[0].encoder.reset();
  CHECK_THROWS_AS(validate_library(lib), std::invalid_argument);
}

TEST_CASE("trainer config validation") {
  MlpsConfig cfg;
  cfg.meta_batch = 1;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg = MlpsConfig();
  cfg.kappa = 0.0;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg = MlpsConfig();
  cfg.dtw_length = 1;
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  CHECK_NOTHROW(validate_config(MlpsConfig()));
}
