#include "psl/harness/config.hpp"

#include <cstdio>
#include <fstream>

namespace psl::harness {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* ctx) {
  if (!j.is_object()) throw std::invalid_argument(std::string(ctx) + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string(ctx) + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_kind(const json& j, const char* key, core::EnvKind& out) {
  if (j.contains(key)) out = core::env_kind_from_string(j.at(key).get<std::string>());
}

}  // namespace

json to_json(const envs::EnvParams& p) {
  return json{{"segment_length", p.segment_length},
              {"x_limit", p.x_limit},
              {"step_scale", p.step_scale},
              {"noise_std", p.noise_std},
              {"goal_radius", p.goal_radius},
              {"door_y", p.door_y},
              {"door_half_width", p.door_half_width},
              {"band_y0", p.band_y0},
              {"band_y1", p.band_y1},
              {"band_half_width", p.band_half_width},
              {"wind_drift_scale", p.wind_drift_scale},
              {"coin_radius", p.coin_radius},
              {"block_half_width", p.block_half_width},
              {"block_y0", p.block_y0},
              {"block_y1", p.block_y1},
              {"wind_full_state", p.wind_full_state}};
}

envs::EnvParams env_params_from_json(const json& j) {
  check_keys(j,
             {"segment_length", "x_limit", "step_scale", "noise_std", "goal_radius",
              "door_y", "door_half_width", "band_y0", "band_y1", "band_half_width",
              "wind_drift_scale", "coin_radius", "block_half_width", "block_y0",
              "block_y1", "wind_full_state"},
             "env");
  envs::EnvParams p;
  read_field(j, "segment_length", p.segment_length);
  read_field(j, "x_limit", p.x_limit);
  read_field(j, "step_scale", p.step_scale);
  read_field(j, "noise_std", p.noise_std);
  read_field(j, "goal_radius", p.goal_radius);
  read_field(j, "door_y", p.door_y);
  read_field(j, "door_half_width", p.door_half_width);
  read_field(j, "band_y0", p.band_y0);
  read_field(j, "band_y1", p.band_y1);
  read_field(j, "band_half_width", p.band_half_width);
  read_field(j, "wind_drift_scale", p.wind_drift_scale);
  read_field(j, "coin_radius", p.coin_radius);
  read_field(j, "block_half_width", p.block_half_width);
  read_field(j, "block_y0", p.block_y0);
  read_field(j, "block_y1", p.block_y1);
  read_field(j, "wind_full_state", p.wind_full_state);
  if (p.segment_length <= 0 || p.step_scale <= 0 || p.noise_std < 0 || p.goal_radius <= 0)
    throw std::invalid_argument("env: geometry values out of range");
  return p;
}

json to_json(const mlps::MlpsConfig& c) {
  return json{{"kind", core::to_string(c.kind)},
              {"num_train_tasks", c.num_train_tasks},
              {"d_z", c.d_z},
              {"policy_hidden", c.policy_hidden},
              {"encoder_hidden", c.encoder_hidden},
              {"lr", c.lr},
              {"gamma", c.gamma},
              {"alpha_ent", c.alpha_ent},
              {"polyak", c.polyak},
              {"alpha_nce", c.alpha_nce},
              {"beta_smooth", c.beta_smooth},
              {"kappa", c.kappa},
              {"kl_scale", c.kl_scale},
              {"meta_batch", c.meta_batch},
              {"embedding_batch", c.embedding_batch},
              {"horizon", c.horizon},
              {"dtw_length", c.dtw_length},
              {"buffer_capacity", c.buffer_capacity},
              {"max_env_steps", c.max_env_steps},
              {"tasks_per_round", c.tasks_per_round},
              {"prior_episodes", c.prior_episodes},
              {"posterior_episodes", c.posterior_episodes},
              {"train_steps_per_round", c.train_steps_per_round},
              {"max_grad_norm", c.max_grad_norm},
              {"smooth_anneal_steps", c.smooth_anneal_steps},
              {"gate_encoder_lr_scale", c.gate_encoder_lr_scale},
              {"z_whiten_tau", c.z_whiten_tau},
              {"warmup_steps", c.warmup_steps},
              {"eval_every_rounds", c.eval_every_rounds},
              {"eval_tasks", c.eval_tasks},
              {"eval_episodes", c.eval_episodes},
              {"early_stop_success", c.early_stop_success},
              {"seed", c.seed},
              {"env", to_json(c.env)}};
}

mlps::MlpsConfig mlps_config_from_json(const json& j) {
  check_keys(j,
             {"kind", "num_train_tasks", "d_z", "policy_hidden", "encoder_hidden", "lr",
              "gamma", "alpha_ent", "polyak", "alpha_nce", "beta_smooth", "kappa",
              "kl_scale", "meta_batch", "embedding_batch", "horizon", "dtw_length",
              "buffer_capacity", "max_env_steps", "tasks_per_round", "prior_episodes",
              "posterior_episodes", "train_steps_per_round", "max_grad_norm",
              "smooth_anneal_steps", "gate_encoder_lr_scale", "z_whiten_tau", "warmup_steps",
              "eval_every_rounds", "eval_tasks", "eval_episodes", "early_stop_success",
              "seed", "env"},
             "mlps");
  mlps::MlpsConfig c;
  read_kind(j, "kind", c.kind);
  read_field(j, "num_train_tasks", c.num_train_tasks);
  read_field(j, "d_z", c.d_z);
  read_field(j, "policy_hidden", c.policy_hidden);
  read_field(j, "encoder_hidden", c.encoder_hidden);
  read_field(j, "lr", c.lr);
  read_field(j, "gamma", c.gamma);
  read_field(j, "alpha_ent", c.alpha_ent);
  read_field(j, "polyak", c.polyak);
  read_field(j, "alpha_nce", c.alpha_nce);
  read_field(j, "beta_smooth", c.beta_smooth);
  read_field(j, "kappa", c.kappa);
  read_field(j, "kl_scale", c.kl_scale);
  read_field(j, "meta_batch", c.meta_batch);
  read_field(j, "embedding_batch", c.embedding_batch);
  read_field(j, "horizon", c.horizon);
  read_field(j, "dtw_length", c.dtw_length);
  read_field(j, "buffer_capacity", c.buffer_capacity);
  read_field(j, "max_env_steps", c.max_env_steps);
  read_field(j, "tasks_per_round", c.tasks_per_round);
  read_field(j, "prior_episodes", c.prior_episodes);
  read_field(j, "posterior_episodes", c.posterior_episodes);
  read_field(j, "train_steps_per_round", c.train_steps_per_round);
  read_field(j, "max_grad_norm", c.max_grad_norm);
  read_field(j, "smooth_anneal_steps", c.smooth_anneal_steps);
  read_field(j, "gate_encoder_lr_scale", c.gate_encoder_lr_scale);
  read_field(j, "z_whiten_tau", c.z_whiten_tau);
  read_field(j, "warmup_steps", c.warmup_steps);
  read_field(j, "eval_every_rounds", c.eval_every_rounds);
  read_field(j, "eval_tasks", c.eval_tasks);
  read_field(j, "eval_episodes", c.eval_episodes);
  read_field(j, "early_stop_success", c.early_stop_success);
  read_field(j, "seed", c.seed);
  if (j.contains("env")) c.env = env_params_from_json(j.at("env"));
  mlps::validate_config(c);
  return c;
}

json to_json(const hps::HpsConfig& c) {
  return json{{"hidden", c.hidden},
              {"lr", c.lr},
              {"gamma", c.gamma},
              {"alpha_ent", c.alpha_ent},
              {"polyak", c.polyak},
              {"batch", c.batch},
              {"reward_scale", c.reward_scale},
              {"buffer_capacity", c.buffer_capacity},
              {"max_high_steps", c.max_high_steps},
              {"warmup_high_steps", c.warmup_high_steps},
              {"eval_every", c.eval_every},
              {"eval_episodes", c.eval_episodes},
              {"early_stop_success", c.early_stop_success},
              {"interact_temp", c.interact_temp},
              {"update_temp", c.update_temp},
              {"separate_critics", c.separate_critics},
              {"max_grad_norm", c.max_grad_norm},
              {"seed", c.seed}};
}

hps::HpsConfig hps_config_from_json(const json& j) {
  check_keys(j,
             {"hidden", "lr", "gamma", "alpha_ent", "polyak", "batch", "reward_scale",
              "buffer_capacity", "max_high_steps", "warmup_high_steps", "eval_every",
              "eval_episodes", "early_stop_success", "interact_temp", "update_temp",
              "separate_critics", "max_grad_norm", "seed"},
             "hps");
  hps::HpsConfig c;
  read_field(j, "hidden", c.hidden);
  read_field(j, "lr", c.lr);
  read_field(j, "gamma", c.gamma);
  read_field(j, "alpha_ent", c.alpha_ent);
  read_field(j, "polyak", c.polyak);
  read_field(j, "batch", c.batch);
  read_field(j, "reward_scale", c.reward_scale);
  read_field(j, "buffer_capacity", c.buffer_capacity);
  read_field(j, "max_high_steps", c.max_high_steps);
  read_field(j, "warmup_high_steps", c.warmup_high_steps);
  read_field(j, "eval_every", c.eval_every);
  read_field(j, "eval_episodes", c.eval_episodes);
  read_field(j, "early_stop_success", c.early_stop_success);
  read_field(j, "interact_temp", c.interact_temp);
  read_field(j, "update_temp", c.update_temp);
  read_field(j, "separate_critics", c.separate_critics);
  read_field(j, "max_grad_norm", c.max_grad_norm);
  read_field(j, "seed", c.seed);
  if (c.lr <= 0 || c.batch < 1 || c.max_high_steps < 1 || c.eval_every < 1 ||
      c.eval_episodes < 1 || c.interact_temp <= 0 || c.update_temp <= 0)
    throw std::invalid_argument("hps: values out of range");
  return c;
}

json to_json(const envs::CourseSpec& c) {
  json barriers = json::array();
  for (const auto& b : c.barriers) {
    std::vector<double> theta(b.hidden_param.data(),
                              b.hidden_param.data() + b.hidden_param.size());
    barriers.push_back(json{{"kind", core::to_string(b.kind)}, {"theta", theta}});
  }
  return json{{"barriers", barriers},
              {"skill_horizon", c.skill_horizon},
              {"high_level_horizon", c.high_level_horizon},
              {"env", to_json(c.params)}};
}

envs::CourseSpec course_from_json(const json& j) {
  check_keys(j, {"barriers", "skill_horizon", "high_level_horizon", "env"}, "course");
  envs::CourseSpec c;
  if (!j.contains("barriers")) throw std::invalid_argument("course: missing barriers");
  for (const auto& b : j.at("barriers")) {
    check_keys(b, {"kind", "theta"}, "course.barriers");
    core::TaskSpec t;
    t.kind = core::env_kind_from_string(b.at("kind").get<std::string>());
    const auto theta = b.value("theta", std::vector<double>{});
    t.hidden_param = Eigen::Map<const core::Vec>(theta.data(),
                                                 static_cast<long>(theta.size()));
    c.barriers.push_back(std::move(t));
  }
  read_field(j, "skill_horizon", c.skill_horizon);
  read_field(j, "high_level_horizon", c.high_level_horizon);
  if (j.contains("env")) c.params = env_params_from_json(j.at("env"));
  for (auto& b : c.barriers) b.horizon = c.skill_horizon;
  envs::validate_course(c);
  return c;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace psl::harness
