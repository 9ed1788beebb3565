#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "psl/harness/experiments.hpp"
#include "psl/harness/metrics.hpp"

using namespace psl::harness;
using psl::core::EnvKind;
using psl::core::Vec;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("psl_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config json round trips and strict key checking") {
  psl::mlps::MlpsConfig mc;
  mc.kind = EnvKind::Wind;
  mc.alpha_nce = 3.5;
  mc.seed = 42;
  mc.env.noise_std = 0.01;
  const json j = to_json(mc);
  const psl::mlps::MlpsConfig back = mlps_config_from_json(j);
  CHECK(back.kind == EnvKind::Wind);
  CHECK(back.alpha_nce == 3.5);
  CHECK(back.seed == 42);
  CHECK(back.env.noise_std == 0.01);
  CHECK(to_json(back) == j);

  json bad = j;
  bad["not_a_key"] = 1;
  CHECK_THROWS_AS(mlps_config_from_json(bad), std::invalid_argument);
  json bad_env = j;
  bad_env["env"]["bogus"] = 2;
  CHECK_THROWS_AS(mlps_config_from_json(bad_env), std::invalid_argument);

  // Partial configs override defaults only for present keys.
  const psl::mlps::MlpsConfig sparse = mlps_config_from_json(json{{"kappa", 0.25}});
  CHECK(sparse.kappa == 0.25);
  CHECK(sparse.meta_batch == 16);

  psl::hps::HpsConfig hc;
  hc.reward_scale = 2.0;
  hc.separate_critics = true;
  const psl::hps::HpsConfig hback = hps_config_from_json(to_json(hc));
  CHECK(hback.reward_scale == 2.0);
  CHECK(hback.separate_critics);
  CHECK_THROWS_AS(hps_config_from_json(json{{"junk", 0}}), std::invalid_argument);
  CHECK_THROWS_AS(hps_config_from_json(json{{"batch", 0}}), std::invalid_argument);
}

TEST_CASE("course spec json round trip") {
  psl::envs::CourseSpec spec = make_mixed_course(psl::envs::EnvParams{}, 40);
  REQUIRE(spec.barriers.size() == 5);
  const psl::envs::CourseSpec back = course_from_json(to_json(spec));
  REQUIRE(back.barriers.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.barriers[i].kind == spec.barriers[i].kind);
    CHECK((back.barriers[i].hidden_param - spec.barriers[i].hidden_param)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(back.skill_horizon == 40);
  // Mixed course interleaves the three parameterized kinds.
  CHECK(spec.barriers[0].kind == EnvKind::Door);
  CHECK(spec.barriers[1].kind == EnvKind::Wind);
  CHECK(spec.barriers[2].kind == EnvKind::GatherOne);
}

TEST_CASE("config hash is stable and key-order independent") {
  const json a = {{"x", 1}, {"y", 2.5}};
  const json b = {{"y", 2.5}, {"x", 1}};
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);  // 64-bit hex
  CHECK(config_hash(a) != config_hash(json{{"x", 1}, {"y", 2.6}}));
}

TEST_CASE("skill checkpoint round trips bit-exactly") {
  TempDir tmp;
  psl::nn::Rng rng(5);
  SkillCheckpoint ckpt;
  ckpt.config.kind = EnvKind::Door;
  ckpt.config.seed = 9;
  ckpt.config.policy_hidden = {8};
  ckpt.config.encoder_hidden = {8};
  ckpt.policy = psl::mlps::make_skill_policy(psl::core::kFullStateDim, 2, 2, {8}, rng);
  ckpt.encoder = psl::mlps::make_context_encoder(EnvKind::Door, 2, {8}, rng);
  ckpt.encoder_target = psl::mlps::clone_encoder(*ckpt.encoder);
  ckpt.sim = psl::mlps::make_bilinear(2, rng);
  ckpt.bounds_lo = Vec::Constant(2, -0.75);
  ckpt.bounds_hi = Vec::Constant(2, 0.75);
  ckpt.bounds_t = 90.0;

  const std::string dir = tmp.str() + "/skill";
  save_skill_checkpoint(dir, ckpt);
  const SkillCheckpoint back = load_skill_checkpoint(dir);

  CHECK(back.config.seed == 9);
  CHECK(back.bounds_t == 90.0);
  CHECK((back.bounds_lo - ckpt.bounds_lo).cwiseAbs().maxCoeff() == 0.0);
  bool all_equal = true;
  const auto compare = [&](const psl::nn::Mlp& x, const psl::nn::Mlp& y) {
    for (std::size_t l = 0; l < x.weights.size(); ++l) {
      all_equal &= x.weights[l].value == y.weights[l].value;
      all_equal &= x.biases[l].value == y.biases[l].value;
    }
  };
  compare(back.policy.actor, ckpt.policy.actor);
  compare(back.policy.critic1, ckpt.policy.critic1);
  compare(back.policy.target2, ckpt.policy.target2);
  compare(back.encoder->net, ckpt.encoder->net);
  compare(back.encoder_target->net, ckpt.encoder_target->net);
  CHECK(all_equal);
  CHECK(back.sim->w.value == ckpt.sim->w.value);

  // Saving twice produces identical bytes.
  const std::string dir2 = tmp.str() + "/skill2";
  save_skill_checkpoint(dir2, ckpt);
  std::ifstream f1(dir + "/params.bin", std::ios::binary);
  std::ifstream f2(dir2 + "/params.bin", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("checkpoint tampering is rejected with named errors") {
  TempDir tmp;
  psl::nn::Rng rng(6);
  SkillCheckpoint ckpt;
  ckpt.config.policy_hidden = {8};
  ckpt.config.encoder_hidden = {8};
  ckpt.policy = psl::mlps::make_skill_policy(psl::core::kFullStateDim, 2, 2, {8}, rng);
  ckpt.encoder = psl::mlps::make_context_encoder(EnvKind::Door, 2, {8}, rng);
  ckpt.encoder_target = psl::mlps::clone_encoder(*ckpt.encoder);
  ckpt.sim = psl::mlps::make_bilinear(2, rng);
  const std::string dir = tmp.str() + "/skill";
  save_skill_checkpoint(dir, ckpt);

  // Config edits invalidate the stored hash.
  json manifest = load_json_file(dir + "/manifest.json");
  manifest["config"]["lr"] = 0.123;
  write_json_file(dir + "/manifest.json", manifest);
  CHECK_THROWS_WITH_AS(load_skill_checkpoint(dir), doctest::Contains("hash"),
                       std::invalid_argument);

  // Consistent hash but mismatched shapes: the error names the parameter.
  manifest["config_hash"] = config_hash(manifest["config"]);
  manifest["params"][0]["rows"] = 99;
  write_json_file(dir + "/manifest.json", manifest);
  const std::string pname = manifest["params"][0]["name"].get<std::string>();
  CHECK_THROWS_WITH_AS(load_skill_checkpoint(dir), doctest::Contains(pname.c_str()),
                       std::invalid_argument);

  // Truncated parameter blob.
  manifest["params"][0]["rows"] = 5;
  write_json_file(dir + "/manifest.json", manifest);
  std::filesystem::resize_file(dir + "/params.bin", 16);
  CHECK_THROWS_AS(load_skill_checkpoint(dir), std::invalid_argument);

  CHECK_THROWS_AS(load_skill_checkpoint(tmp.str() + "/nope"), std::invalid_argument);
}

TEST_CASE("metrics writer enforces monotone steps and omits wall clock") {
  TempDir tmp;
  const std::string path = tmp.str() + "/metrics.jsonl";
  {
    MetricsWriter w(path);
    w.write(10, json{{"a", 1.0}});
    w.write(10, json{{"a", 2.0}});  // equal steps allowed
    w.write(25, json{{"a", 3.0}});
    CHECK_THROWS_AS(w.write(24, json{{"a", 4.0}}), std::logic_error);
  }
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    CHECK(j.contains("step"));
    CHECK_FALSE(j.contains("time"));
    ++rows;
  }
  CHECK(rows == 3);

  psl::mlps::MlpsMetricsRow row;
  row.env_steps = 7;
  row.eval_success = 0.5;
  const json rj = mlps_row_to_json(row);
  CHECK(rj["eval_success"] == 0.5);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
  // Monotone but nonlinear still ranks perfectly.
  CHECK(spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
  // Hand value with a tie in b: ranks a = 1,2,3; b = 1.5,1.5,3.
  const double r = spearman({1, 2, 3}, {5, 5, 9});
  CHECK(r == doctest::Approx(0.866).epsilon(0.001));
  CHECK_THROWS_AS(spearman({1, 2}, {1}), std::invalid_argument);
}

TEST_CASE("coefficient of variation") {
  const CvStat s = coefficient_of_variation({2, 4, 4, 4, 5, 5, 7, 9});
  // mean 5, sample sd sqrt(32/7).
  CHECK_FALSE(s.degenerate);
  CHECK(s.cv == doctest::Approx(std::sqrt(32.0 / 7.0) / 5.0).epsilon(1e-12));

  const CvStat z = coefficient_of_variation({0.0, 0.0, 0.0});
  CHECK(z.degenerate);
  CHECK_THROWS_AS(coefficient_of_variation({1.0}), std::invalid_argument);
}

TEST_CASE("cv tasks are evenly spaced over the central 90 percent") {
  const auto tasks = cv_tasks(EnvKind::Door, 40);
  REQUIRE(tasks.size() == 5);
  const double expect[] = {-4.5, -2.25, 0.0, 2.25, 4.5};
  for (int i = 0; i < 5; ++i)
    CHECK(tasks[static_cast<std::size_t>(i)].hidden_param[0] == doctest::Approx(expect[i]));
  // Non-swept dimensions sit at the midpoint.
  const auto two = cv_tasks(EnvKind::GatherTwo, 40);
  CHECK(two[0].hidden_param[1] == doctest::Approx(0.0));
}

TEST_CASE("run directory honors the environment root") {
  TempDir tmp;
  // setenv is fine here: tests run single-threaded.
  setenv("PSL_RUN_ROOT", tmp.str().c_str(), 1);
  const std::string dir = run_directory("exp", 3);
  unsetenv("PSL_RUN_ROOT");
  CHECK(dir.find(tmp.str()) == 0);
  CHECK(dir.find("exp") != std::string::npos);
  CHECK(dir.find("3") != std::string::npos);
  CHECK(std::filesystem::exists(dir));

  log_note(dir, "hello");
  std::ifstream log(dir + "/run.log");
  std::string content((std::istreambuf_iterator<char>(log)), {});
  CHECK(content.find("hello") != std::string::npos);
}
