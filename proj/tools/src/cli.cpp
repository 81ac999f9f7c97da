#include "balayage_cli/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace balayage::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::config, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

int run(const std::string& command, const std::string& config_path, const Overrides& overrides, std::ostream& out,
        std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (overrides.out) cfg.output = *overrides.out;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.tolerance) {
      if (!(*overrides.tolerance > 0.0)) throw Error(ErrorKind::config, "--tolerance: must be > 0");
      cfg.solver.tolerance = *overrides.tolerance;
    }
    if (overrides.method) cfg.solver.method = parse_solve_method(*overrides.method);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  }

  const std::string dir = cfg.output;
  RunOutput result = run_command(command, std::move(cfg), err);
  try {
    std::filesystem::create_directories(dir);
    write_file(std::filesystem::path(dir) / "result.json", result.result_json);
    write_file(std::filesystem::path(dir) / "report.csv", result.report_csv);
    write_file(std::filesystem::path(dir) / "log.txt", result.log);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  }
  out << result.log;
  return result.exit_code;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Balayage of discrete measures, capacities and convergence experiments"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  std::string method;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"sweep", "Sweep a measure onto a mask (inner, outer or signed)"},
      {"capacity", "Equilibrium measure and inner capacity of a mask"},
      {"exhaust", "Exhaustion experiment over nested masks"},
      {"verify", "Run the invariant suite on an instance or on random instances"},
      {"oracle", "Compare against brute-force enumeration or the sphere mass law"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Run config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--tolerance", tolerance, "Relative KKT tolerance override");
    sub->add_option("--method", method, "Solver method")->check(CLI::IsMember({"active_set", "projected_gradient"}));
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  for (CLI::App* sub : subs) {
    if (!sub->parsed()) continue;
    Overrides o;
    if (sub->count("--out")) o.out = out_dir;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--tolerance")) o.tolerance = tolerance;
    if (sub->count("--method")) o.method = method;
    return run(sub->get_name(), config_path, o, std::cout, std::cerr);
  }
  return config_error;
}

}  // namespace balayage::cli
