#pragma once

#include <fstream>

#include "psl/harness/config.hpp"

namespace psl::harness {

// JSONL metrics stream. Rows carry a monotone step counter and named
// scalars only; wall-clock timing goes to the sidecar run log so identical
// config + seed reruns emit byte-identical streams.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(long step, const json& fields);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  long last_step_ = -1;
};

// Resolves <root>/<experiment>/<seed>/ under the PSL_RUN_ROOT environment
// variable (default "runs") and creates it.
std::string run_directory(const std::string& experiment, std::uint64_t seed);

// Timestamped human-readable note in <dir>/run.log.
void log_note(const std::string& dir, const std::string& message);

json mlps_row_to_json(const mlps::MlpsMetricsRow& row);
json hps_row_to_json(const hps::HpsMetricsRow& row);

}  // namespace psl::harness
