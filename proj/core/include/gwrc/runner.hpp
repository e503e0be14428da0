#pragma once

#include <string>
#include <vector>

#include "gwrc/config.hpp"

namespace gwrc {

struct RunResult {
  int exit_code = 0;      // 0 ok, 2 inconclusive verdict / failed check
  std::string artifact;   // primary output (JSON or CSV text)
  std::vector<std::pair<std::string, std::string>> extra_files;  // path -> text
};

// Dispatches one experiment and renders its artifact. Does not touch the
// filesystem; see run_and_write.
RunResult run_experiment(const ExperimentConfig& cfg);

// Runs the experiment and delivers the artifact: atomic write (temp file +
// rename) when cfg.out is set, stdout otherwise. Returns the exit code:
// 0 success, 2 inconclusive, 1 error (error details as JSON on stderr).
int run_and_write(const ExperimentConfig& cfg);

void atomic_write(const std::string& path, const std::string& text);

struct SelfcheckItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Invariant battery over the configured laws: detailed balance on sampled
// snapshots, bracket monotonicity, fold vs linear-solve oracle equivalence,
// and a worker-count replay of both estimator pipelines.
std::vector<SelfcheckItem> selfcheck(const ExperimentConfig& cfg);

}  // namespace gwrc
