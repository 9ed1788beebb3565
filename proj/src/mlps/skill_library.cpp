#include "psl/mlps/skill_library.hpp"

namespace psl::mlps {

int SkillLibrary::max_dz() const {
  int m = 0;
  for (const auto& e : entries) m = std::max(m, e.d_z);
  return m;
}

const SkillEntry& SkillLibrary::at(int k) const {
  if (k < 0 || k >= num_skills())
    throw std::out_of_range("skill label " + std::to_string(k) + " out of range");
  return entries[static_cast<std::size_t>(k)];
}

void validate_library(const SkillLibrary& lib) {
  if (lib.entries.empty()) throw std::invalid_argument("skill library is empty");
  for (const auto& e : lib.entries) {
    if (e.d_z != e.policy.d_z)
      throw std::invalid_argument("skill " + e.name + ": d_z mismatch with policy");
    if (e.bounds_lo.size() != e.d_z || e.bounds_hi.size() != e.d_z)
      throw std::invalid_argument("skill " + e.name + ": bounds dimension mismatch");
    for (long i = 0; i < e.d_z; ++i)
      if (!(e.bounds_lo[i] < e.bounds_hi[i]))
        throw std::invalid_argument("skill " + e.name + ": bounds must satisfy lo < hi");
    if (e.skill_horizon <= 0)
      throw std::invalid_argument("skill " + e.name + ": non-positive horizon");
    if (e.d_z > 0 && !e.encoder)
      throw std::invalid_argument("skill " + e.name + ": missing encoder");
  }
}

}  // namespace psl::mlps
