#pragma once

#include <string>
#include <vector>

#include "qscope/config.hpp"

#ifndef QSCOPE_VERSION
#define QSCOPE_VERSION "0.0.0"
#endif

namespace qscope {

struct RunReport {
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  double wall_seconds = 0;
};

/// Filter time used when tau = auto.
double auto_tau(const RunConfig& cfg);
/// SNR evaluation time used when snr_time = auto.
double auto_snr_time(const RunConfig& cfg);

/// Executes the configured subcommand and writes every artifact, config.resolved and
/// manifest.json into cfg.output_dir. On failure the manifest is written with
/// status "failed" and partial = true before the exception propagates.
RunReport run(const RunConfig& cfg);

}  // namespace qscope
