#include "balayage/serialize.hpp"

#include "balayage/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace balayage {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, std::string(what) + ": " + e.what());
  }
}

void require_keys(const json& doc, std::initializer_list<const char*> keys, const char* what,
                  std::initializer_list<const char*> optional = {}) {
  if (!doc.is_object()) throw Error(ErrorKind::config, std::string(what) + " must be a JSON object");
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    for (const char* k : optional) known = known || item.key() == k;
    if (!known) throw Error(ErrorKind::config, std::string(what) + ": unknown field '" + item.key() + "'");
  }
  for (const char* k : keys) {
    if (!doc.contains(k)) throw Error(ErrorKind::config, std::string(what) + ": missing field '" + k + "'");
  }
}

double number(const json& v, const char* what) {
  if (!v.is_number()) throw Error(ErrorKind::config, std::string(what) + " must be a number");
  return v.get<double>();
}

}  // namespace

std::string space_to_json(const DiscreteSpace& space) {
  json points = json::array();
  for (Index i = 0; i < space.size(); ++i) points.push_back(space.point(i));
  json doc;
  doc["version"] = kSpaceFormatVersion;
  doc["dim"] = space.dim();
  doc["points"] = std::move(points);
  doc["cell_weights"] = std::vector<double>(space.cell_weights().begin(), space.cell_weights().end());
  // surface samplings record the dimension their cell weights measure
  if (space.intrinsic_dim() != space.dim()) doc["intrinsic_dim"] = space.intrinsic_dim();
  return doc.dump();
}

DiscreteSpace space_from_json(const std::string& text) {
  const json doc = parse(text, "space document");
  require_keys(doc, {"version", "dim", "points", "cell_weights"}, "space document", {"intrinsic_dim"});
  if (doc["version"] != kSpaceFormatVersion) {
    throw Error(ErrorKind::config, "space document: unsupported version " + doc["version"].dump());
  }
  if (!doc["dim"].is_number_integer() || doc["dim"].get<int>() < 1) {
    throw Error(ErrorKind::config, "space document: dim must be a positive integer");
  }
  const int dim = doc["dim"].get<int>();
  if (!doc["points"].is_array() || !doc["cell_weights"].is_array()) {
    throw Error(ErrorKind::config, "space document: points and cell_weights must be arrays");
  }
  std::vector<double> coords;
  for (const auto& p : doc["points"]) {
    if (!p.is_array() || static_cast<int>(p.size()) != dim) {
      throw Error(ErrorKind::config, "space document: every point needs " + std::to_string(dim) + " coordinates");
    }
    for (const auto& c : p) coords.push_back(number(c, "space document: coordinate"));
  }
  std::vector<double> weights;
  for (const auto& w : doc["cell_weights"]) weights.push_back(number(w, "space document: cell weight"));
  if (weights.size() * static_cast<std::size_t>(dim) != coords.size()) {
    throw Error(ErrorKind::config, "space document: points and cell_weights differ in length");
  }
  int intrinsic = 0;
  if (doc.contains("intrinsic_dim")) {
    if (!doc["intrinsic_dim"].is_number_integer()) throw Error(ErrorKind::config, "space document: intrinsic_dim must be an integer");
    intrinsic = doc["intrinsic_dim"].get<int>();
  }
  return DiscreteSpace(dim, std::move(coords), std::move(weights), intrinsic);
}

std::string measure_to_json(const DiscreteMeasure& measure) {
  json doc;
  doc["space"] = measure.space_id();
  doc["weights"] = std::vector<double>(measure.weights().data(), measure.weights().data() + measure.size());
  return doc.dump();
}

DiscreteMeasure measure_from_json(const std::string& text, const DiscreteSpace& space) {
  const json doc = parse(text, "measure document");
  require_keys(doc, {"space", "weights"}, "measure document");
  if (!doc["space"].is_string()) throw Error(ErrorKind::config, "measure document: space must be a string");
  require_same_space(space.id(), doc["space"].get<std::string>(), "measure document");
  if (!doc["weights"].is_array() || static_cast<Index>(doc["weights"].size()) != space.size()) {
    throw Error(ErrorKind::config, "measure document: weights must have one entry per point");
  }
  Eigen::VectorXd w(space.size());
  for (Index i = 0; i < space.size(); ++i) w[i] = number(doc["weights"][static_cast<std::size_t>(i)], "measure weight");
  return DiscreteMeasure(space.id(), std::move(w));
}

std::string format_double(double value) { return json(value).dump(); }

}  // namespace balayage
