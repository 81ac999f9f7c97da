#pragma once

#include "balayage_cli/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace balayage::cli {

enum ExitCode : int { ok = 0, config_error = 1, non_convergence = 2, verification_failure = 3 };

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<std::string> method;
};

/// Documents a command produces; written to result.json, report.csv and log.txt.
struct RunOutput {
  std::string result_json;
  std::string report_csv;
  std::string log;
  int exit_code = ok;
};

RunOutput run_command(const std::string& command, RunConfig config, std::ostream& err);

/// Applies overrides, runs the command and writes the output directory.
int run(const std::string& command, const std::string& config_path, const Overrides& overrides, std::ostream& out,
        std::ostream& err);

/// Full command-line entry point.
int main_entry(int argc, char** argv);

extern const char* const kToolVersion;

}  // namespace balayage::cli
