#pragma once

#include "psl/harness/config.hpp"

namespace psl::harness {

// Checkpoints are a directory: manifest.json (version, kind, config, config
// hash, seed, parameter shapes) plus params.bin holding raw doubles in
// manifest order. Round trips are bit-exact.
inline constexpr int kCheckpointVersion = 1;

struct SkillCheckpoint {
  mlps::MlpsConfig config;
  mlps::SkillPolicy policy;
  std::optional<mlps::ContextEncoder> encoder;
  std::optional<mlps::ContextEncoder> encoder_target;
  std::optional<mlps::BilinearSimilarity> sim;
  core::Vec bounds_lo, bounds_hi;  // empty until the bounds pass ran
  double bounds_t = 0.0;
};

void save_skill_checkpoint(const std::string& dir, const SkillCheckpoint& ckpt);
SkillCheckpoint load_skill_checkpoint(const std::string& dir);

struct AgentCheckpoint {
  hps::HpsConfig config;
  envs::CourseSpec course;
  hps::HpsAgent agent;
};

void save_agent_checkpoint(const std::string& dir, const AgentCheckpoint& ckpt,
                           const mlps::SkillLibrary& lib);
// Rebuilding the agent needs the same library the checkpoint was trained on.
AgentCheckpoint load_agent_checkpoint(const std::string& dir,
                                      const mlps::SkillLibrary& lib);

// One library entry per checkpoint directory, in the given order. Entries
// without stored bounds are rejected.
mlps::SkillLibrary library_from_checkpoints(const std::vector<std::string>& dirs,
                                            int skill_horizon);

void ensure_directory(const std::string& dir);

}  // namespace psl::harness
