#include "psl/harness/checkpoint.hpp"

#include <filesystem>
#include <fstream>

namespace psl::harness {

namespace {

using nn::Mat;

struct Pack {
  std::vector<std::pair<std::string, const Mat*>> items;

  void add(const std::string& name, const Mat& m) { items.emplace_back(name, &m); }
  void add_mlp(const std::string& prefix, const nn::Mlp& net) {
    int i = 0;
    net.for_each_param([&](const nn::Param& p) {
      add(prefix + "/p" + std::to_string(i++), p.value);
    });
  }
};

struct MutPack {
  std::vector<std::pair<std::string, Mat*>> items;

  void add(const std::string& name, Mat& m) { items.emplace_back(name, &m); }
  void add_mlp(const std::string& prefix, nn::Mlp& net) {
    int i = 0;
    net.for_each_param(
        [&](nn::Param& p) { add(prefix + "/p" + std::to_string(i++), p.value); });
  }
};

void write_pack(const std::string& dir, const Pack& pack, json manifest) {
  json params = json::array();
  std::ofstream bin(dir + "/params.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + dir + "/params.bin");
  for (const auto& [name, m] : pack.items) {
    params.push_back(json{{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    bin.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(sizeof(double)) * m->size());
  }
  manifest["params"] = std::move(params);
  manifest["version"] = kCheckpointVersion;
  write_json_file(dir + "/manifest.json", manifest);
}

json read_manifest(const std::string& dir) {
  json manifest = load_json_file(dir + "/manifest.json");
  if (!manifest.contains("version") ||
      manifest.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument(dir + ": unsupported checkpoint version");
  const std::string stored = manifest.value("config_hash", "");
  if (stored != config_hash(manifest.at("config")))
    throw std::invalid_argument(dir + ": config hash mismatch, checkpoint corrupted");
  return manifest;
}

void read_pack(const std::string& dir, const json& manifest, MutPack& pack) {
  std::ifstream bin(dir + "/params.bin", std::ios::binary);
  if (!bin) throw std::invalid_argument("cannot open " + dir + "/params.bin");
  const json& params = manifest.at("params");
  if (params.size() != pack.items.size())
    throw std::invalid_argument(dir + ": parameter count mismatch");
  for (std::size_t i = 0; i < pack.items.size(); ++i) {
    auto& [name, m] = pack.items[i];
    const json& meta = params[i];
    if (meta.at("name").get<std::string>() != name)
      throw std::invalid_argument(dir + ": expected parameter '" + name + "', found '" +
                                  meta.at("name").get<std::string>() + "'");
    const long rows = meta.at("rows").get<long>();
    const long cols = meta.at("cols").get<long>();
    if (rows != m->rows() || cols != m->cols())
      throw std::invalid_argument(
          dir + ": shape mismatch for '" + name + "': stored " + std::to_string(rows) +
          "x" + std::to_string(cols) + ", expected " + std::to_string(m->rows()) + "x" +
          std::to_string(m->cols()));
    bin.read(reinterpret_cast<char*>(m->data()),
             static_cast<std::streamsize>(sizeof(double)) * m->size());
    if (!bin) throw std::invalid_argument(dir + ": params.bin truncated at '" + name + "'");
  }
}

std::vector<double> to_std(const core::Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

core::Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const core::Vec>(v.data(), static_cast<long>(v.size()));
}

}  // namespace

void ensure_directory(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

void save_skill_checkpoint(const std::string& dir, const SkillCheckpoint& ckpt) {
  ensure_directory(dir);
  Pack pack;
  pack.add_mlp("actor", ckpt.policy.actor);
  pack.add_mlp("critic1", ckpt.policy.critic1);
  pack.add_mlp("critic2", ckpt.policy.critic2);
  pack.add_mlp("target1", ckpt.policy.target1);
  pack.add_mlp("target2", ckpt.policy.target2);
  if (ckpt.encoder) pack.add_mlp("encoder", ckpt.encoder->net);
  if (ckpt.encoder_target) pack.add_mlp("encoder_target", ckpt.encoder_target->net);
  if (ckpt.sim) pack.add("sim/w", ckpt.sim->w.value);

  const json cfg = to_json(ckpt.config);
  json manifest{{"kind", "skill"},
                {"config", cfg},
                {"config_hash", config_hash(cfg)},
                {"seed", ckpt.config.seed},
                {"bounds_lo", to_std(ckpt.bounds_lo)},
                {"bounds_hi", to_std(ckpt.bounds_hi)},
                {"bounds_t", ckpt.bounds_t},
                {"z_shift", to_std(ckpt.policy.z_shift)},
                {"z_scale", to_std(ckpt.policy.z_scale)}};
  write_pack(dir, pack, std::move(manifest));
}

SkillCheckpoint load_skill_checkpoint(const std::string& dir) {
  const json manifest = read_manifest(dir);
  if (manifest.value("kind", "") != "skill")
    throw std::invalid_argument(dir + ": not a skill checkpoint");

  SkillCheckpoint ckpt;
  ckpt.config = mlps_config_from_json(manifest.at("config"));
  if (envs::hidden_param_dim(ckpt.config.kind) == 0) ckpt.config.d_z = 0;
  nn::Rng rng(0);
  ckpt.policy = mlps::make_skill_policy(core::kFullStateDim, 2, ckpt.config.d_z,
                                        ckpt.config.policy_hidden, rng);
  if (ckpt.config.d_z > 0) {
    ckpt.encoder = mlps::make_context_encoder(ckpt.config.kind, ckpt.config.d_z,
                                              ckpt.config.encoder_hidden, rng,
                                              ckpt.config.env.wind_full_state);
    ckpt.encoder_target = mlps::clone_encoder(*ckpt.encoder);
    ckpt.sim = mlps::make_bilinear(ckpt.config.d_z, rng);
  }

  MutPack pack;
  pack.add_mlp("actor", ckpt.policy.actor);
  pack.add_mlp("critic1", ckpt.policy.critic1);
  pack.add_mlp("critic2", ckpt.policy.critic2);
  pack.add_mlp("target1", ckpt.policy.target1);
  pack.add_mlp("target2", ckpt.policy.target2);
  if (ckpt.encoder) pack.add_mlp("encoder", ckpt.encoder->net);
  if (ckpt.encoder_target) pack.add_mlp("encoder_target", ckpt.encoder_target->net);
  if (ckpt.sim) pack.add("sim/w", ckpt.sim->w.value);
  read_pack(dir, manifest, pack);

  ckpt.bounds_lo = from_std(manifest.value("bounds_lo", std::vector<double>{}));
  ckpt.bounds_hi = from_std(manifest.value("bounds_hi", std::vector<double>{}));
  ckpt.bounds_t = manifest.value("bounds_t", 0.0);
  ckpt.policy.z_shift = from_std(manifest.value("z_shift", std::vector<double>{}));
  ckpt.policy.z_scale = from_std(manifest.value("z_scale", std::vector<double>{}));
  return ckpt;
}

void save_agent_checkpoint(const std::string& dir, const AgentCheckpoint& ckpt,
                           const mlps::SkillLibrary& lib) {
  ensure_directory(dir);
  Pack pack;
  pack.add_mlp("theta_d", ckpt.agent.theta_d);
  pack.add_mlp("theta_c", ckpt.agent.theta_c);
  pack.add_mlp("q1", ckpt.agent.q1);
  pack.add_mlp("q2", ckpt.agent.q2);
  pack.add_mlp("value", ckpt.agent.value);
  pack.add_mlp("value_target", ckpt.agent.value_target);

  std::vector<std::string> skills;
  for (const auto& e : lib.entries) skills.push_back(e.name);
  const json cfg = to_json(ckpt.config);
  json manifest{{"kind", "agent"},
                {"config", cfg},
                {"config_hash", config_hash(cfg)},
                {"seed", ckpt.config.seed},
                {"course", to_json(ckpt.course)},
                {"skills", skills}};
  write_pack(dir, pack, std::move(manifest));
}

AgentCheckpoint load_agent_checkpoint(const std::string& dir,
                                      const mlps::SkillLibrary& lib) {
  const json manifest = read_manifest(dir);
  if (manifest.value("kind", "") != "agent")
    throw std::invalid_argument(dir + ": not an agent checkpoint");

  AgentCheckpoint ckpt;
  ckpt.config = hps_config_from_json(manifest.at("config"));
  ckpt.course = course_from_json(manifest.at("course"));
  nn::Rng rng(0);
  ckpt.agent = hps::make_hps_agent(lib, hps::course_obs_scale(ckpt.course),
                                   ckpt.config.hidden, rng, ckpt.config.separate_critics);
  ckpt.agent.interact_temp = ckpt.config.interact_temp;
  ckpt.agent.update_temp = ckpt.config.update_temp;

  MutPack pack;
  pack.add_mlp("theta_d", ckpt.agent.theta_d);
  pack.add_mlp("theta_c", ckpt.agent.theta_c);
  pack.add_mlp("q1", ckpt.agent.q1);
  pack.add_mlp("q2", ckpt.agent.q2);
  pack.add_mlp("value", ckpt.agent.value);
  pack.add_mlp("value_target", ckpt.agent.value_target);
  read_pack(dir, manifest, pack);
  return ckpt;
}

mlps::SkillLibrary library_from_checkpoints(const std::vector<std::string>& dirs,
                                            int skill_horizon) {
  if (dirs.empty()) throw std::invalid_argument("no skill checkpoints given");
  mlps::SkillLibrary lib;
  for (const std::string& dir : dirs) {
    SkillCheckpoint ckpt = load_skill_checkpoint(dir);
    mlps::SkillEntry entry;
    entry.name = core::to_string(ckpt.config.kind) + "#" +
                 std::to_string(lib.entries.size());
    entry.kind = ckpt.config.kind;
    entry.policy = std::move(ckpt.policy);
    entry.encoder = std::move(ckpt.encoder);
    entry.d_z = ckpt.config.d_z;
    entry.skill_horizon = skill_horizon;
    if (entry.d_z > 0 && ckpt.bounds_lo.size() != entry.d_z)
      throw std::invalid_argument(dir + ": checkpoint has no stored action bounds");
    entry.bounds_lo = ckpt.bounds_lo;
    entry.bounds_hi = ckpt.bounds_hi;
    if (lib.entries.empty()) lib.params = ckpt.config.env;
    lib.entries.push_back(std::move(entry));
  }
  validate_library(lib);
  return lib;
}

}  // namespace psl::harness
