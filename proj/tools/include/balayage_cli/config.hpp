#pragma once

#include "balayage/balayage.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace balayage::cli {

constexpr int kConfigVersion = 1;

/// Parameters of the single experiment a run performs.
struct Experiment {
  std::string type;  // sweep | capacity | exhaust | verify | oracle

  // sweep / exhaust / verify / oracle(brute)
  std::string measure;
  std::string second_measure;  // verify: nu for the symmetry check
  std::string mask;
  std::string mode = "inner";  // sweep: inner | outer | signed

  // exhaust
  std::vector<std::string> masks;
  int stages = 0;

  // verify
  std::string suite = "instance";  // instance | random
  int trials = 20;

  // oracle
  std::string oracle = "brute";  // brute | sphere_mass
  double radius = 1.0;
  double source_distance = 2.0;
  std::vector<int> counts{500, 2000, 8000};
};

struct RunConfig {
  std::string source_text;  // canonical dump of the parsed document
  std::string hash;         // fingerprint of source_text
  std::optional<DiscreteSpace> space;
  std::optional<KernelSpec> kernel;
  DiagRule diag_rule;
  std::map<std::string, std::vector<double>> measures;  // raw signed weights
  std::map<std::string, RegionMask> masks;
  SolveOptions solver;
  Experiment experiment;
  std::string output = "balayage-out";
  std::uint64_t seed = 0;
};

/// Parses and validates a config document. Unknown fields and dangling
/// references are rejected with Error(ErrorKind::config). `base_dir` resolves
/// relative file references.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

}  // namespace balayage::cli
