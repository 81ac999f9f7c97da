#include "balayage_cli/config.hpp"

#include "balayage/serialize.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace balayage::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::config, path + ": " + message);
}

// Object view that rejects unknown keys.
class Fields {
 public:
  Fields(const json& node, std::string path, std::set<std::string> allowed) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
    for (const auto& item : node_.items()) {
      if (!allowed.count(item.key())) fail(path_ + "." + item.key(), "unknown field");
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  std::string path(const std::string& key) const { return path_ + "." + key; }

  const json& at(const std::string& key) const {
    if (!has(key)) fail(path(key), "missing required field");
    return node_.at(key);
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path(key), "expected a finite number");
    return x;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(path(key), "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<long long> integers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(path(key), "expected an array of integers");
    std::vector<long long> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail(path(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<long long>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(path(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(path(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

 private:
  const json& node_;
  std::string path_;
};

std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(what, "cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const std::string& base_dir, const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() ? file : (std::filesystem::path(base_dir) / p).string();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

DiscreteSpace parse_space(const json& node, const std::string& base_dir) {
  if (!node.is_object() || !node.contains("kind")) fail("space", "expected an object with a 'kind' field");
  if (!node["kind"].is_string()) fail("space.kind", "expected a string");
  const std::string kind = node["kind"].get<std::string>();
  if (kind == "grid") {
    Fields f(node, "space", {"kind", "lower", "upper", "resolution"});
    Box box{f.numbers("lower"), f.numbers("upper")};
    if (box.lower.size() != box.upper.size() || box.lower.empty()) {
      fail("space", "lower and upper must be nonempty and of equal length");
    }
    std::vector<int> res;
    if (f.at("resolution").is_array()) {
      for (long long r : f.integers("resolution")) res.push_back(static_cast<int>(r));
    } else {
      res.assign(box.lower.size(), static_cast<int>(f.integer("resolution")));
    }
    return build_grid(box, res);
  }
  if (kind == "sphere") {
    Fields f(node, "space", {"kind", "center", "radius", "count"});
    return build_sphere(f.numbers("center"), f.number("radius"), static_cast<int>(f.integer("count")));
  }
  if (kind == "inline") {
    Fields f(node, "space", {"kind", "dim", "points", "cell_weights"});
    const auto dim = f.integer("dim");
    if (dim < 1) fail("space.dim", "must be >= 1");
    const json& pts = f.at("points");
    if (!pts.is_array()) fail("space.points", "expected an array of points");
    std::vector<double> coords;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string where = "space.points[" + std::to_string(i) + "]";
      if (!pts[i].is_array() || static_cast<long long>(pts[i].size()) != dim) {
        fail(where, "expected " + std::to_string(dim) + " coordinates");
      }
      for (const auto& c : pts[i]) {
        if (!c.is_number()) fail(where, "expected numbers");
        coords.push_back(c.get<double>());
      }
    }
    std::vector<double> weights = f.numbers("cell_weights");
    if (weights.size() != pts.size()) fail("space.cell_weights", "needs one weight per point");
    return DiscreteSpace(static_cast<int>(dim), std::move(coords), std::move(weights));
  }
  if (kind == "file") {
    Fields f(node, "space", {"kind", "path"});
    return space_from_json(read_file(resolve(base_dir, f.string("path")), "space.path"));
  }
  fail("space.kind", "unknown space kind '" + kind + "' (expected grid, sphere, inline or file)");
}

KernelSpec parse_kernel(const json& node, int default_dim) {
  if (!node.is_object() || !node.contains("family")) fail("kernel", "expected an object with a 'family' field");
  if (!node["family"].is_string()) fail("kernel.family", "expected a string");
  const std::string family = node["family"].get<std::string>();
  KernelSpec spec;
  if (family == "riesz") {
    Fields f(node, "kernel", {"family", "alpha", "dim"});
    spec = KernelSpec::riesz(f.number("alpha"), static_cast<int>(f.integer("dim", default_dim)));
  } else if (family == "newtonian") {
    Fields f(node, "kernel", {"family", "dim"});
    spec = KernelSpec::newtonian(static_cast<int>(f.integer("dim", default_dim)));
  } else if (family == "green_ball") {
    Fields f(node, "kernel", {"family", "center", "radius"});
    spec = KernelSpec::green_ball(f.numbers("center"), f.number("radius"));
  } else {
    fail("kernel.family", "unknown kernel family '" + family + "' (expected riesz, newtonian or green_ball)");
  }
  return spec;
}

DiagRule parse_diag_rule(const json& node) {
  Fields f(node, "diag_rule", {"kind", "value"});
  DiagRule rule;
  try {
    rule.kind = parse_diag_rule_kind(f.string("kind"));
  } catch (const Error& e) {
    fail("diag_rule.kind", e.what());
  }
  if (rule.kind == DiagRule::Kind::fixed) {
    rule.value = f.number("value");
    if (!(rule.value > 0.0)) fail("diag_rule.value", "must be > 0");
  } else if (f.has("value")) {
    fail("diag_rule.value", "only allowed with kind 'fixed'");
  }
  return rule;
}

std::vector<double> parse_measure(const json& node, const std::string& path, const DiscreteSpace& space,
                                  const std::string& base_dir) {
  Fields f(node, path, {"weights", "point_masses", "file"});
  const int given = static_cast<int>(f.has("weights")) + static_cast<int>(f.has("point_masses")) + static_cast<int>(f.has("file"));
  if (given != 1) fail(path, "give exactly one of 'weights', 'point_masses' or 'file'");
  const auto n = static_cast<std::size_t>(space.size());
  if (f.has("weights")) {
    std::vector<double> w = f.numbers("weights");
    if (w.size() != n) fail(f.path("weights"), "needs " + std::to_string(n) + " entries, got " + std::to_string(w.size()));
    return w;
  }
  if (f.has("file")) {
    const DiscreteMeasure m = measure_from_json(read_file(resolve(base_dir, f.string("file")), f.path("file")), space);
    return std::vector<double>(m.weights().data(), m.weights().data() + m.size());
  }
  std::vector<double> w(n, 0.0);
  const json& arr = f.at("point_masses");
  if (!arr.is_array()) fail(f.path("point_masses"), "expected an array");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = f.path("point_masses") + "[" + std::to_string(k) + "]";
    Fields pm(arr[k], where, {"index", "mass"});
    const long long i = pm.integer("index");
    if (i < 0 || static_cast<std::size_t>(i) >= n) fail(where + ".index", "out of range");
    w[static_cast<std::size_t>(i)] += pm.number("mass", 1.0);
  }
  return w;
}

RegionMask parse_mask(const json& node, const std::string& path, const DiscreteSpace& space) {
  Fields f(node, path, {"indices", "ball", "box", "all", "empty"});
  if (node.size() != 1) fail(path, "give exactly one of 'indices', 'ball', 'box', 'all' or 'empty'");
  if (f.has("indices")) {
    std::vector<Index> idx;
    for (long long i : f.integers("indices")) {
      if (i < 0 || i >= space.size()) fail(f.path("indices"), "index " + std::to_string(i) + " out of range");
      idx.push_back(static_cast<Index>(i));
    }
    return RegionMask(space.id(), space.size(), std::move(idx));
  }
  if (f.has("ball")) {
    Fields b(f.at("ball"), f.path("ball"), {"center", "radius"});
    const auto c = b.numbers("center");
    if (static_cast<int>(c.size()) != space.dim()) fail(b.path("center"), "dimension mismatch");
    return mask_ball(space, c, b.number("radius"));
  }
  if (f.has("box")) {
    Fields b(f.at("box"), f.path("box"), {"lower", "upper"});
    const auto lo = b.numbers("lower");
    const auto hi = b.numbers("upper");
    if (static_cast<int>(lo.size()) != space.dim() || static_cast<int>(hi.size()) != space.dim()) {
      fail(f.path("box"), "dimension mismatch");
    }
    return mask_from_predicate(space, [&](std::span<const double> p) {
      for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a] < lo[a] || p[a] > hi[a]) return false;
      }
      return true;
    });
  }
  const std::string key = f.has("all") ? "all" : "empty";
  if (!f.at(key).is_boolean() || !f.at(key).get<bool>()) fail(f.path(key), "expected true");
  return key == "all" ? RegionMask::full(space) : RegionMask::empty(space);
}

SolveOptions parse_solver(const json& node) {
  Fields f(node, "solver", {"tolerance", "max_iterations", "method"});
  SolveOptions o;
  o.tolerance = f.number("tolerance", o.tolerance);
  if (!(o.tolerance > 0.0)) fail("solver.tolerance", "must be > 0");
  o.max_iterations = static_cast<Index>(f.integer("max_iterations", 0));
  if (o.max_iterations < 0) fail("solver.max_iterations", "must be >= 1 (or 0 for the default 50 N)");
  if (f.has("method")) {
    try {
      o.method = parse_solve_method(f.string("method"));
    } catch (const Error& e) {
      fail("solver.method", e.what());
    }
  }
  return o;
}

Experiment parse_experiment(const json& node) {
  if (!node.is_object() || !node.contains("type") || !node["type"].is_string()) {
    fail("experiment", "expected an object with a string 'type' field");
  }
  Experiment e;
  e.type = node["type"].get<std::string>();
  if (e.type == "sweep") {
    Fields f(node, "experiment", {"type", "measure", "mask", "mode"});
    e.measure = f.string("measure");
    e.mask = f.string("mask");
    e.mode = f.string("mode", "inner");
    if (e.mode != "inner" && e.mode != "outer" && e.mode != "signed") {
      fail("experiment.mode", "unknown mode '" + e.mode + "' (expected inner, outer or signed)");
    }
  } else if (e.type == "capacity") {
    Fields f(node, "experiment", {"type", "mask"});
    e.mask = f.string("mask");
  } else if (e.type == "exhaust") {
    Fields f(node, "experiment", {"type", "measure", "masks", "mask", "stages"});
    e.measure = f.string("measure");
    if (f.has("masks") == f.has("mask")) fail("experiment", "give either 'masks' or 'mask' with 'stages'");
    if (f.has("masks")) {
      e.masks = f.strings("masks");
      if (e.masks.empty()) fail("experiment.masks", "must not be empty");
      if (f.has("stages")) fail("experiment.stages", "only allowed with 'mask'");
    } else {
      e.mask = f.string("mask");
      e.stages = static_cast<int>(f.integer("stages", 4));
      if (e.stages < 1) fail("experiment.stages", "must be >= 1");
    }
  } else if (e.type == "verify") {
    Fields f(node, "experiment", {"type", "suite", "measure", "second_measure", "mask", "trials"});
    e.suite = f.string("suite", "instance");
    if (e.suite == "instance") {
      e.measure = f.string("measure");
      e.mask = f.string("mask");
      e.second_measure = f.string("second_measure", "");
    } else if (e.suite == "random") {
      e.trials = static_cast<int>(f.integer("trials", 20));
      if (e.trials < 1) fail("experiment.trials", "must be >= 1");
      for (const char* k : {"measure", "second_measure", "mask"}) {
        if (f.has(k)) fail(f.path(k), "not used by the random suite");
      }
    } else {
      fail("experiment.suite", "unknown suite '" + e.suite + "' (expected instance or random)");
    }
  } else if (e.type == "oracle") {
    Fields f(node, "experiment", {"type", "oracle", "measure", "mask", "radius", "source_distance", "counts"});
    e.oracle = f.string("oracle", "brute");
    if (e.oracle == "brute") {
      e.measure = f.string("measure");
      e.mask = f.string("mask");
    } else if (e.oracle == "sphere_mass") {
      e.radius = f.number("radius", 1.0);
      e.source_distance = f.number("source_distance", 2.0);
      if (f.has("counts")) {
        e.counts.clear();
        for (long long c : f.integers("counts")) e.counts.push_back(static_cast<int>(c));
        if (e.counts.empty()) fail("experiment.counts", "must not be empty");
      }
    } else {
      fail("experiment.oracle", "unknown oracle '" + e.oracle + "' (expected brute or sphere_mass)");
    }
  } else {
    fail("experiment.type", "unknown experiment '" + e.type + "'");
  }
  return e;
}

void require_name(const std::map<std::string, RegionMask>& masks, const std::string& name, const std::string& path) {
  if (!masks.count(name)) fail(path, "unknown mask '" + name + "'");
}

void require_name(const std::map<std::string, std::vector<double>>& measures, const std::string& name,
                  const std::string& path) {
  if (!measures.count(name)) fail(path, "unknown measure '" + name + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("config", std::string("invalid JSON: ") + e.what());
  }
  Fields top(doc, "config",
             {"version", "space", "kernel", "diag_rule", "measures", "masks", "solver", "experiment", "output", "seed"});
  if (top.integer("version") != kConfigVersion) {
    fail("config.version", "unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }

  RunConfig cfg;
  cfg.source_text = doc.dump();
  cfg.hash = fnv1a_hex(cfg.source_text);
  cfg.experiment = parse_experiment(top.at("experiment"));
  if (top.has("solver")) cfg.solver = parse_solver(top.at("solver"));
  if (top.has("diag_rule")) cfg.diag_rule = parse_diag_rule(top.at("diag_rule"));
  if (top.has("output")) cfg.output = top.string("output");
  if (top.has("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("config.seed", "expected a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }

  const Experiment& e = cfg.experiment;
  const bool needs_instance = !(e.type == "oracle" && e.oracle == "sphere_mass") && !(e.type == "verify" && e.suite == "random");
  if (!needs_instance) {
    for (const char* k : {"space", "kernel", "measures", "masks", "diag_rule"}) {
      if (top.has(k)) fail(top.path(k), std::string("not used by this experiment"));
    }
    return cfg;
  }

  try {
    cfg.space.emplace(parse_space(top.at("space"), base_dir));
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::config) throw;
    fail("space", err.what());
  }
  const DiscreteSpace& space = *cfg.space;
  try {
    cfg.kernel = parse_kernel(top.at("kernel"), space.dim());
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::config) throw;
    fail("kernel", err.what());
  }

  if (top.has("measures")) {
    const json& ms = top.at("measures");
    if (!ms.is_object()) fail("config.measures", "expected an object of named measures");
    for (const auto& item : ms.items()) {
      cfg.measures[item.key()] = parse_measure(item.value(), "measures." + item.key(), space, base_dir);
    }
  }
  if (top.has("masks")) {
    const json& ms = top.at("masks");
    if (!ms.is_object()) fail("config.masks", "expected an object of named masks");
    for (const auto& item : ms.items()) {
      cfg.masks.emplace(item.key(), parse_mask(item.value(), "masks." + item.key(), space));
    }
  }

  if (e.type != "capacity") require_name(cfg.measures, e.measure, "experiment.measure");
  if (!e.second_measure.empty()) require_name(cfg.measures, e.second_measure, "experiment.second_measure");
  if (!e.mask.empty()) require_name(cfg.masks, e.mask, "experiment.mask");
  for (const auto& m : e.masks) require_name(cfg.masks, m, "experiment.masks");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const std::string text = read_file(path, "--config");
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(text, parent.empty() ? std::string(".") : parent.string());
}

}  // namespace balayage::cli
