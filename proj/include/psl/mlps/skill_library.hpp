#pragma once

#include <optional>

#include "psl/envs/point_env.hpp"
#include "psl/mlps/encoder.hpp"
#include "psl/mlps/sac.hpp"

namespace psl::mlps {

// One frozen parameterized skill: the skill-conditioned policy, its context
// encoder, and the published per-dimension bounds of the z action space.
struct SkillEntry {
  std::string name;
  core::EnvKind kind = core::EnvKind::Door;
  SkillPolicy policy;
  std::optional<ContextEncoder> encoder;  // absent for discrete-only skills
  Vec bounds_lo, bounds_hi;               // d_z entries, lo < hi
  int d_z = 0;
  int skill_horizon = 40;
};

// The TPAMDP action space: K frozen skills.
struct SkillLibrary {
  std::vector<SkillEntry> entries;
  envs::EnvParams params;

  int num_skills() const { return static_cast<int>(entries.size()); }
  int max_dz() const;
  const SkillEntry& at(int k) const;
};

void validate_library(const SkillLibrary& lib);

}  // namespace psl::mlps
