#pragma once

#include <json.hpp>

#include "psl/hps/trainer.hpp"
#include "psl/mlps/trainer.hpp"

namespace psl::harness {

using nlohmann::json;

// Strict parsers: unknown keys are rejected, present keys override the
// struct defaults, and the result is validated before use. Serializers emit
// every field so the resolved config echoed into a run directory is
// complete.
json to_json(const envs::EnvParams& p);
envs::EnvParams env_params_from_json(const json& j);

json to_json(const mlps::MlpsConfig& c);
mlps::MlpsConfig mlps_config_from_json(const json& j);

json to_json(const hps::HpsConfig& c);
hps::HpsConfig hps_config_from_json(const json& j);

json to_json(const envs::CourseSpec& c);
envs::CourseSpec course_from_json(const json& j);

json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// FNV-1a over the canonical dump; ties checkpoints to their configs.
std::string config_hash(const json& j);

}  // namespace psl::harness
