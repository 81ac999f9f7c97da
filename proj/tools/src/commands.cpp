#include "balayage_cli/cli.hpp"

#include "balayage/capacity.hpp"
#include "balayage/convergence.hpp"
#include "balayage/oracle.hpp"
#include "balayage/serialize.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace balayage::cli {

#ifndef BALAYAGE_VERSION
#define BALAYAGE_VERSION "0.0.0"
#endif

const char* const kToolVersion = BALAYAGE_VERSION;

using nlohmann::ordered_json;

namespace {

ordered_json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ordered_json to_json(const std::vector<Index>& v) {
  ordered_json a = ordered_json::array();
  for (Index i : v) a.push_back(static_cast<long long>(i));
  return a;
}

// Non-finite values have no JSON representation; they are written as null.
ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

std::string fmt(double x) { return format_double(x); }

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(long long x) { return std::to_string(x); }
  static std::string cell(Index x) { return std::to_string(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "true" : "false"; }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  std::ostringstream out_;
};

struct Context {
  RunConfig& cfg;
  std::ostringstream log;
};

ordered_json metadata(const RunConfig& cfg, const std::string& command) {
  ordered_json m;
  m["tool"] = "balayage";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config_hash"] = cfg.hash;
  m["seed"] = cfg.seed;
  if (cfg.kernel) m["kernel"] = cfg.kernel->describe();
  if (cfg.space) {
    m["space"] = cfg.space->id();
    m["points"] = static_cast<long long>(cfg.space->size());
    m["diag_rule"] = cfg.diag_rule.describe();
  }
  m["solver"] = {{"tolerance", cfg.solver.tolerance},
                 {"max_iterations", static_cast<long long>(cfg.solver.max_iterations)},
                 {"method", to_string(cfg.solver.method)}};
  return m;
}

EnergyForm build_form(const RunConfig& cfg) { return assemble(*cfg.kernel, *cfg.space, cfg.diag_rule); }

DiscreteMeasure positive_measure(const RunConfig& cfg, const std::string& name) {
  const auto& raw = cfg.measures.at(name);
  for (double w : raw) {
    if (w < 0.0) throw Error(ErrorKind::config, "measures." + name + ": negative weight (use mode 'signed')");
  }
  return DiscreteMeasure(cfg.space->id(), Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Index>(raw.size())));
}

ordered_json result_json(const BalayageResult& r) {
  ordered_json j;
  j["swept"] = to_json(r.swept.weights());
  j["active_set"] = to_json(r.active_set);
  j["kkt"] = {{"stationarity", r.kkt_stationarity},
              {"feasibility", r.kkt_feasibility},
              {"complementarity", r.kkt_complementarity},
              {"relative_max", r.max_relative_residual()}};
  j["distance"] = r.distance;
  j["iterations"] = static_cast<long long>(r.iterations);
  j["domination_violations"] = static_cast<long long>(r.domination_violations);
  j["worst_domination_violation"] = r.worst_domination_violation;
  j["clipped_on_mask"] = static_cast<long long>(r.clipped_on_mask);
  j["scale"] = r.scale;
  j["outer"] = r.outer;
  j["method"] = to_string(r.method);
  return j;
}

void sweep_csv(CsvWriter& csv, const EnergyForm& form, const DiscreteMeasure& mu, const BalayageResult& r,
               const RegionMask& mask) {
  const Eigen::VectorXd kmu = potential(form, mu);
  const Eigen::VectorXd ks = potential(form, r.swept);
  for (Index i = 0; i < form.size(); ++i) {
    csv.row(i, mu.weights()[i], r.swept.weights()[i], kmu[i], ks[i], mask.contains(i));
  }
}

RunOutput cmd_sweep(Context& ctx) {
  RunConfig& cfg = ctx.cfg;
  const Experiment& e = cfg.experiment;
  const EnergyForm form = build_form(cfg);
  const RegionMask& mask = cfg.masks.at(e.mask);
  ordered_json doc;
  doc["metadata"] = metadata(cfg, "sweep");
  doc["mode"] = e.mode;
  doc["mask_size"] = static_cast<long long>(mask.size());
  RunOutput out;
  if (e.mode == "signed") {
    const auto& raw = cfg.measures.at(e.measure);
    const SignedMeasure mu = hahn_jordan(cfg.space->id(), raw);
    const auto r = sweep_signed(form, mu, mask, cfg.solver);
    doc["plus"] = result_json(r.plus);
    doc["minus"] = result_json(r.minus);
    doc["combined"] = to_json(r.combined);
    CsvWriter csv({"index", "mu", "swept", "in_mask"});
    for (Index i = 0; i < form.size(); ++i) csv.row(i, raw[static_cast<std::size_t>(i)], r.combined[i], mask.contains(i));
    out.report_csv = csv.str();
    ctx.log << "signed sweep onto " << mask.size() << " of " << form.size() << " points; max relative KKT residual "
            << fmt(std::max(r.plus.max_relative_residual(), r.minus.max_relative_residual())) << '\n';
  } else {
    const DiscreteMeasure mu = positive_measure(cfg, e.measure);
    const BalayageResult r = e.mode == "outer" ? outer_sweep(form, mu, mask, cfg.solver) : sweep(form, mu, mask, cfg.solver);
    const ordered_json body = result_json(r);
    for (const auto& item : body.items()) doc[item.key()] = item.value();
    CsvWriter csv({"index", "mu", "swept", "potential_mu", "potential_swept", "in_mask"});
    sweep_csv(csv, form, mu, r, mask);
    out.report_csv = csv.str();
    ctx.log << e.mode << " sweep onto " << mask.size() << " of " << form.size() << " points: distance " << fmt(r.distance)
            << ", active set " << r.active_set.size() << ", iterations " << r.iterations << ", max relative KKT residual "
            << fmt(r.max_relative_residual()) << ", domination violations " << r.domination_violations << '\n';
  }
  out.result_json = doc.dump();
  return out;
}

RunOutput cmd_capacity(Context& ctx) {
  RunConfig& cfg = ctx.cfg;
  const EnergyForm form = build_form(cfg);
  const RegionMask& mask = cfg.masks.at(cfg.experiment.mask);
  const CapacityResult c = equilibrium(form, mask, cfg.solver);
  ordered_json doc;
  doc["metadata"] = metadata(cfg, "capacity");
  doc["capacity"] = c.capacity;
  doc["energy"] = number(c.energy);
  doc["robin_constant"] = number(c.robin_constant);
  doc["equilibrium"] = to_json(c.equilibrium.weights());
  doc["support"] = to_json(c.support);
  doc["potential_spread"] = c.potential_spread;
  doc["feasibility_gap"] = c.feasibility_gap;
  doc["negligible"] = is_negligible(mask);
  RunOutput out;
  out.result_json = doc.dump();
  CsvWriter csv({"index", "equilibrium", "potential", "in_mask"});
  const Eigen::VectorXd pot = potential(form, c.equilibrium);
  for (Index i = 0; i < form.size(); ++i) csv.row(i, c.equilibrium.weights()[i], pot[i], mask.contains(i));
  out.report_csv = csv.str();
  ctx.log << "capacity of a " << mask.size() << "-point mask: " << fmt(c.capacity) << " (energy " << fmt(c.energy)
          << ", support " << c.support.size() << ")\n";
  return out;
}

RunOutput cmd_exhaust(Context& ctx) {
  RunConfig& cfg = ctx.cfg;
  const Experiment& e = cfg.experiment;
  const EnergyForm form = build_form(cfg);
  const DiscreteMeasure mu = positive_measure(cfg, e.measure);
  std::vector<RegionMask> masks;
  if (!e.masks.empty()) {
    for (const auto& name : e.masks) masks.push_back(cfg.masks.at(name));
  } else {
    masks = default_exhaustion(*cfg.space, cfg.masks.at(e.mask), e.stages);
  }
  const ExhaustionReport rep = exhaust(form, mu, masks, cfg.solver);

  ordered_json doc;
  doc["metadata"] = metadata(cfg, "exhaust");
  ordered_json stages = ordered_json::array();
  CsvWriter csv({"stage", "mask_size", "distance", "distance_squared", "step", "active_set_size",
                 "domination_violations", "iterations"});
  for (std::size_t j = 0; j < rep.stages.size(); ++j) {
    const auto& s = rep.stages[j];
    ordered_json st;
    st["mask_size"] = static_cast<long long>(s.mask.size());
    st["distance"] = s.distance;
    st["distance_squared"] = s.distance * s.distance;
    st["step"] = s.step;
    st["active_set_size"] = static_cast<long long>(s.active_set_size);
    st["domination_violations"] = static_cast<long long>(s.domination_violations);
    st["iterations"] = static_cast<long long>(s.iterations);
    st["swept"] = to_json(s.swept.weights());
    st["potential"] = to_json(s.potential);
    stages.push_back(std::move(st));
    csv.row(static_cast<long long>(j), s.mask.size(), s.distance, s.distance * s.distance, s.step, s.active_set_size,
            s.domination_violations, s.iterations);
    ctx.log << "stage " << j << ": |A_j| = " << s.mask.size() << ", distance^2 " << fmt(s.distance * s.distance)
            << ", step " << fmt(s.step) << '\n';
  }
  doc["stages"] = std::move(stages);
  doc["direct"] = to_json(rep.direct.weights());
  doc["final_discrepancy"] = rep.final_discrepancy;
  doc["scale"] = rep.scale;
  ctx.log << "final stage vs direct sweep: " << fmt(rep.final_discrepancy) << '\n';
  RunOutput out;
  out.result_json = doc.dump();
  out.report_csv = csv.str();
  return out;
}

// ---- verification suite ----

struct Check {
  std::string name;
  bool evaluated = true;
  bool passed = true;
  double residual = 0.0;
  double threshold = 0.0;
  std::string note;
};

double rel_max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), kScaleFloor});
  return (a - b).cwiseAbs().maxCoeff() / denom;
}

void add(std::vector<Check>& checks, std::string name, double residual, double threshold, std::string note = {}) {
  checks.push_back({std::move(name), true, residual <= threshold, residual, threshold, std::move(note)});
}

void skip(std::vector<Check>& checks, std::string name, std::string note) {
  checks.push_back({std::move(name), false, true, 0.0, 0.0, std::move(note)});
}

std::vector<Check> verify_instance(const EnergyForm& form, const DiscreteMeasure& mu, const DiscreteMeasure* nu_in,
                                   const RegionMask& mask, const SolveOptions& opts, std::uint64_t seed) {
  std::vector<Check> checks;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = form.size();
  const std::string& sid = form.space_id();

  const BalayageResult r = sweep(form, mu, mask, opts);
  add(checks, "kkt_certificate", r.max_relative_residual(), opts.tolerance);

  const auto again = sweep(form, r.swept, mask, opts);
  add(checks, "idempotence", rel_max_diff(again.swept.weights(), r.swept.weights()), 1e-10);

  const double a = 2.5;
  const auto scaled = sweep(form, DiscreteMeasure(sid, a * mu.weights()), mask, opts);
  add(checks, "positive_homogeneity", rel_max_diff(scaled.swept.weights(), a * r.swept.weights()), 1e-10);

  double worst_min = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (Index i : mask.indices()) w[i] = unit(rng) < 0.5 ? 0.0 : unit(rng) * std::max(1.0, mu.total_mass());
    const double d = energy_norm(form, Eigen::VectorXd(mu.weights() - w));
    worst_min = std::max(worst_min, (r.distance - d) / r.scale);
  }
  add(checks, "minimality", worst_min, 1e-12);

  Eigen::VectorXd nw(n);
  if (nu_in != nullptr) {
    nw = nu_in->weights();
  } else {
    for (Index i = 0; i < n; ++i) nw[i] = unit(rng) < 0.5 ? unit(rng) : 0.0;
  }
  const DiscreteMeasure nu(sid, nw);
  const auto rn = sweep(form, nu, mask, opts);
  const double lhs = energy_norm(form, Eigen::VectorXd(r.swept.weights() - rn.swept.weights()));
  const double rhs = energy_norm(form, Eigen::VectorXd(mu.weights() - nu.weights()));
  add(checks, "non_expansiveness", (lhs - rhs) / std::max(r.scale, rn.scale), 1e-10);

  const RegionMask support(sid, n, r.swept.support());
  const auto on_support = sweep(form, mu, support, opts);
  add(checks, "set_invariance", rel_max_diff(on_support.swept.weights(), r.swept.weights()), 1e-10);

  const RegionMask outer = mask.unite(RegionMask(sid, n, mu.support()));
  const auto cc = contraction_check(form, mu, mask, outer, opts);
  add(checks, "contraction", cc.holds ? 0.0 : (cc.lhs - cc.rhs), 0.0);

  if (r.domination_passes()) {
    const Eigen::VectorXd g = potential(form, r.swept) - potential(form, mu);
    double worst = 0.0;
    for (Index i : mask.indices()) worst = std::max(worst, std::abs(g[i]) / r.scale);
    add(checks, "equality_on_mask", worst, opts.tolerance);
  } else {
    skip(checks, "equality_on_mask",
         "domination diagnostic fails (" + std::to_string(r.domination_violations) + " off the mask, " +
             std::to_string(r.clipped_on_mask) + " clipped on it)");
  }

  const bool small = n <= 2000;
  const DominationReport dom = small ? discrete_domination(form) : DominationReport{};
  if (small && dom.holds) {
    const auto cert = certify(form, r.swept, mu, mask, build_default_family(form), opts);
    add(checks, "certification", cert.residual, 1e-8);
    add(checks, "symmetry", symmetry_residual(form, mu, nu, mask, opts), 1e-6);
  } else {
    const std::string why = small ? "discrete domination principle fails for this form (worst inverse off-diagonal " +
                                        fmt(dom.worst_offdiagonal) + ")"
                                  : "form too large for the domination test";
    skip(checks, "certification", why);
    skip(checks, "symmetry", why);
  }

  if (n <= kBruteMaxPoints && mask.size() <= kBruteMaxMask) {
    const auto b = brute_sweep(form, mu, mask);
    add(checks, "oracle_agreement", (r.swept.weights() - b.swept.weights()).cwiseAbs().maxCoeff(), 1e-9);
  } else {
    skip(checks, "oracle_agreement", "instance exceeds the exact enumeration limits");
  }

  if (!mask.empty()) {
    const auto c = equilibrium(form, mask, opts);
    add(checks, "equilibrium_kkt", std::max(c.potential_spread, c.feasibility_gap), 1e-8);
    const auto resweep = sweep(form, c.equilibrium, mask, opts);
    add(checks, "equilibrium_sweep_identity", rel_max_diff(resweep.swept.weights(), c.equilibrium.weights()), 1e-10);
  } else {
    skip(checks, "equilibrium_kkt", "empty mask");
    skip(checks, "equilibrium_sweep_identity", "empty mask");
  }
  return checks;
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RunOutput cmd_verify(Context& ctx) {
  RunConfig& cfg = ctx.cfg;
  const Experiment& e = cfg.experiment;
  ordered_json doc;
  doc["metadata"] = metadata(cfg, "verify");
  doc["suite"] = e.suite;

  struct Row {
    std::string instance;
    Check check;
  };
  std::vector<Row> rows;
  if (e.suite == "instance") {
    const EnergyForm form = build_form(cfg);
    const DiscreteMeasure mu = positive_measure(cfg, e.measure);
    std::optional<DiscreteMeasure> nu;
    if (!e.second_measure.empty()) nu = positive_measure(cfg, e.second_measure);
    for (auto& c : verify_instance(form, mu, nu ? &*nu : nullptr, cfg.masks.at(e.mask), cfg.solver, cfg.seed)) {
      rows.push_back({"config", std::move(c)});
    }
  } else {
    std::uint64_t state = cfg.seed;
    ordered_json seeds = ordered_json::array();
    for (int t = 0; t < e.trials; ++t) {
      const std::uint64_t s = splitmix(state);
      seeds.push_back(s);
      const RandomInstance inst = random_instance(s);
      for (auto& c : verify_instance(inst.form, inst.mu, nullptr, inst.mask, cfg.solver, s)) {
        rows.push_back({std::to_string(s), std::move(c)});
      }
    }
    doc["instance_seeds"] = std::move(seeds);
  }

  RunOutput out;
  CsvWriter csv({"instance", "check", "evaluated", "passed", "residual", "threshold"});
  ordered_json checks = ordered_json::array();
  std::size_t failures = 0;
  std::size_t skipped = 0;
  for (const auto& row : rows) {
    const Check& c = row.check;
    csv.row(row.instance, c.name, c.evaluated, c.passed, c.residual, c.threshold);
    ordered_json j;
    j["instance"] = row.instance;
    j["check"] = c.name;
    j["evaluated"] = c.evaluated;
    j["passed"] = c.passed;
    j["residual"] = c.residual;
    j["threshold"] = c.threshold;
    if (!c.note.empty()) j["note"] = c.note;
    checks.push_back(std::move(j));
    if (!c.evaluated) {
      ++skipped;
    } else if (!c.passed) {
      ++failures;
      ctx.log << "FAILED " << c.name << " on instance " << row.instance << ": residual " << fmt(c.residual)
              << " > threshold " << fmt(c.threshold) << '\n';
    }
  }
  doc["checks"] = std::move(checks);
  doc["failures"] = failures;
  doc["skipped"] = skipped;
  doc["passed"] = failures == 0;
  ctx.log << rows.size() << " checks, " << failures << " failed, " << skipped << " skipped\n";
  out.result_json = doc.dump();
  out.report_csv = csv.str();
  out.exit_code = failures == 0 ? ok : verification_failure;
  return out;
}

RunOutput cmd_oracle(Context& ctx) {
  RunConfig& cfg = ctx.cfg;
  const Experiment& e = cfg.experiment;
  ordered_json doc;
  doc["metadata"] = metadata(cfg, "oracle");
  doc["oracle"] = e.oracle;
  RunOutput out;
  if (e.oracle == "brute") {
    const EnergyForm form = build_form(cfg);
    const DiscreteMeasure mu = positive_measure(cfg, e.measure);
    const RegionMask& mask = cfg.masks.at(e.mask);
    const BalayageResult main = sweep(form, mu, mask, cfg.solver);
    const BruteSweepResult brute = brute_sweep(form, mu, mask);
    OracleReport rep = compare(main.swept.weights(), brute.swept.weights(), cfg.solver.tolerance, "brute_sweep");
    rep.oracle_iterations = brute.candidates;
    rep.notes = brute.warning;
    doc["main"] = to_json(rep.main_value);
    doc["oracle_value"] = to_json(rep.oracle_value);
    doc["discrepancy"] = rep.discrepancy;
    doc["threshold"] = rep.threshold;
    doc["flagged"] = rep.flagged;
    doc["exact"] = brute.exact;
    doc["candidates"] = static_cast<long long>(brute.candidates);
    if (!brute.warning.empty()) doc["warning"] = brute.warning;
    CsvWriter csv({"index", "main", "oracle"});
    for (Index i = 0; i < form.size(); ++i) csv.row(i, rep.main_value[i], rep.oracle_value[i]);
    out.report_csv = csv.str();
    ctx.log << "main vs brute-force sweep: discrepancy " << fmt(rep.discrepancy) << " (threshold " << fmt(rep.threshold)
            << ")" << (rep.flagged ? ", FLAGGED" : "") << '\n';
    if (!brute.warning.empty()) ctx.log << "warning: " << brute.warning << '\n';
    out.exit_code = rep.flagged ? verification_failure : ok;
  } else {
    const auto reports = sphere_mass_refinement(e.radius, e.source_distance, e.counts, cfg.solver);
    ordered_json levels = ordered_json::array();
    CsvWriter csv({"count", "mass", "error"});
    for (const auto& r : reports) {
      levels.push_back({{"count", r.count},
                        {"mass", r.mass},
                        {"relative_error", r.relative_error},
                        {"max_relative_residual", r.max_relative_residual}});
      csv.row(r.count, r.mass, r.relative_error);
      ctx.log << "count " << r.count << ": swept mass " << fmt(r.mass) << ", relative error vs r/|y| "
              << fmt(r.relative_error) << '\n';
    }
    doc["radius"] = e.radius;
    doc["source_distance"] = e.source_distance;
    doc["classical"] = e.radius / e.source_distance;
    doc["levels"] = std::move(levels);
    if (reports.size() >= 3) {
      const auto n = reports.size();
      const auto est = estimate_limit(reports[n - 3].mass, reports[n - 2].mass, reports[n - 1].mass);
      doc["refinement"] = {{"convergent", est.convergent}, {"ratio", est.ratio}, {"limit", est.limit}};
      ctx.log << "refinement: ratio " << fmt(est.ratio) << ", extrapolated limit " << fmt(est.limit) << '\n';
    }
    out.report_csv = csv.str();
  }
  out.result_json = doc.dump();
  return out;
}

}  // namespace

RunOutput run_command(const std::string& command, RunConfig config, std::ostream& err) {
  Context ctx{config, {}};
  RunOutput out;
  try {
    if (command != config.experiment.type) {
      throw Error(ErrorKind::config, "experiment.type: '" + config.experiment.type + "' does not match command '" +
                                         command + "'");
    }
    if (command == "sweep") {
      out = cmd_sweep(ctx);
    } else if (command == "capacity") {
      out = cmd_capacity(ctx);
    } else if (command == "exhaust") {
      out = cmd_exhaust(ctx);
    } else if (command == "verify") {
      out = cmd_verify(ctx);
    } else if (command == "oracle") {
      out = cmd_oracle(ctx);
    } else {
      throw Error(ErrorKind::config, "unknown command '" + command + "'");
    }
  } catch (const ConvergenceError& e) {
    ordered_json doc;
    doc["metadata"] = metadata(config, command);
    doc["error"] = e.what();
    doc["best"] = result_json(e.best());
    out.result_json = doc.dump();
    ctx.log << "error: " << e.what() << '\n';
    err << "error: " << e.what() << '\n';
    out.exit_code = non_convergence;
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::non_convergence ? non_convergence : config_error;
    ordered_json doc;
    doc["metadata"] = metadata(config, command);
    doc["error"] = e.what();
    doc["error_kind"] = to_string(e.kind());
    out.result_json = doc.dump();
    ctx.log << "error: " << e.what() << '\n';
    err << "error: " << e.what() << '\n';
    out.exit_code = code;
  }
  if (out.exit_code == verification_failure) {
    err << ctx.log.str();
  }
  out.log = "balayage " + std::string(kToolVersion) + " " + command + " (config " + config.hash + ")\n" + ctx.log.str();
  if (!out.result_json.empty() && out.result_json.back() != '\n') out.result_json += '\n';
  return out;
}

}  // namespace balayage::cli
