#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwrc/laws.hpp"
#include "gwrc/speed.hpp"
#include "gwrc/tree.hpp"

namespace gwrc {

/// Validated experiment description. Parsed from a JSON file plus flag
/// overrides; the echoed form excludes execution-only knobs (workers, output
/// paths, format) so that replays with different worker counts hash and
/// serialize identically.
struct ExperimentConfig {
  OffspringLaw offspring = OffspringLaw::from_map({{2, 1.0}});
  ConductanceLawTable table{ConductanceLaw::constant(1.0)};

  std::string method = "direct";  // direct|formula|covariance|srw|slowdown|ex1|
                                  // theta|bounds|stationarity|selfcheck|dump-tree
  MonteCarloOptions mc;           // sizes, tolerance, caps, seed, workers, mode
  std::uint32_t depth = 3;        // dump-tree truncation depth
  std::uint64_t walks = 10'000;   // empirical escape-direction walks (theta)
  std::vector<double> eps;        // ex1 grid, paired with amps
  std::vector<double> amps;
  bool seed_explicit = false;

  std::string out;               // empty: stdout
  std::string trajectories_out;  // optional per-replica checkpoint CSV (direct)
  enum class Format : std::uint8_t { Json, Csv } format = Format::Json;

  // `overrides_json` is a flat JSON object whose entries win over the file.
  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::string& overrides_json = "{}");
  static ExperimentConfig load(const std::string& path,
                               const std::string& overrides_json = "{}");

  std::string to_json_text() const;  // canonical semantic echo (includes seed)
  std::string config_hash() const;   // fnv1a-64 hex of the echo
};

// Parses one conductance-law object ({"family": ..., params...}).
ConductanceLaw parse_conductance_law(const std::string& json_text,
                                     const std::string& field_path);

}  // namespace gwrc
