#include "psl/harness/metrics.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>

namespace psl::harness {

MetricsWriter::MetricsWriter(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("cannot open metrics file: " + path);
}

void MetricsWriter::write(long step, const json& fields) {
  if (step < last_step_)
    throw std::logic_error("metrics step counter went backwards: " +
                           std::to_string(step) + " after " + std::to_string(last_step_));
  last_step_ = step;
  json row = fields;
  row["step"] = step;
  out_ << row.dump() << "\n";
  out_.flush();
}

std::string run_directory(const std::string& experiment, std::uint64_t seed) {
  const char* root = std::getenv("PSL_RUN_ROOT");
  const std::string dir = std::string(root ? root : "runs") + "/" + experiment + "/" +
                          std::to_string(seed);
  std::filesystem::create_directories(dir);
  return dir;
}

void log_note(const std::string& dir, const std::string& message) {
  std::ofstream log(dir + "/run.log", std::ios::app);
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  log << buf << " " << message << "\n";
}

json mlps_row_to_json(const mlps::MlpsMetricsRow& row) {
  return json{{"round", row.round},
              {"eval_success", row.eval_success},
              {"eval_return", row.eval_return},
              {"train_return", row.train_return},
              {"critic_loss", row.critic_loss},
              {"actor_loss", row.actor_loss},
              {"nce_loss", row.nce_loss},
              {"smooth_loss", row.smooth_loss},
              {"kl", row.kl},
              {"dtw_active", row.dtw_active}};
}

json hps_row_to_json(const hps::HpsMetricsRow& row) {
  return json{{"episodes", row.episodes},
              {"eval_success", row.eval_success},
              {"eval_return", row.eval_return},
              {"eval_barriers", row.eval_barriers},
              {"critic_loss", row.critic_loss},
              {"actor_loss", row.actor_loss},
              {"value_loss", row.value_loss}};
}

}  // namespace psl::harness
