#include "balayage/geometry.hpp"

#include "balayage/error.hpp"
#include "fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace balayage {

namespace {

constexpr double kDistinctnessTolerance = 1e-9;

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::degenerate_geometry: return "dimension-degenerate";
    case ErrorKind::unsupported_dimension: return "unsupported-dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::space_mismatch: return "space-mismatch";
    case ErrorKind::energy_principle: return "energy-principle-violated";
    case ErrorKind::size_limit: return "size-limit";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::nesting: return "non-nested-masks";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

void require_same_space(const std::string& expected, const std::string& actual, const char* what) {
  if (expected != actual) {
    throw Error(ErrorKind::space_mismatch,
                std::string(what) + " lives on space '" + actual + "', expected '" + expected + "'");
  }
}

DiscreteSpace::DiscreteSpace(int dim, std::vector<double> points, std::vector<double> cell_weights, int intrinsic_dim)
    : dim_(dim), intrinsic_dim_(intrinsic_dim == 0 ? dim : intrinsic_dim), weights_(std::move(cell_weights)) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "space dimension must be >= 1");
  if (intrinsic_dim_ < 1 || intrinsic_dim_ > dim_) {
    throw Error(ErrorKind::invalid_argument, "intrinsic dimension must lie in [1, dim]");
  }
  if (weights_.empty()) throw Error(ErrorKind::invalid_argument, "space must contain at least one point");
  if (points.size() != weights_.size() * static_cast<std::size_t>(dim)) {
    throw Error(ErrorKind::invalid_argument, "point array length does not match dim * number of cell weights");
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::invalid_argument, "cell weights must be finite and > 0");
  }
  const std::size_t n = weights_.size();
  coords_.assign(static_cast<std::size_t>(dim), std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) {
      const double x = points[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)];
      if (!std::isfinite(x)) throw Error(ErrorKind::invalid_argument, "point coordinates must be finite");
      coords_[static_cast<std::size_t>(a)][i] = x;
    }
  }

  const double min_dist = min_pairwise_distance();
  const double diam = bounding_box_diameter();
  if (n > 1 && !(min_dist > kDistinctnessTolerance * diam)) {
    throw Error(ErrorKind::degenerate_geometry,
                "points are not distinct: minimum pairwise distance " + std::to_string(min_dist) +
                    " below 1e-9 x bounding-box diameter");
  }

  detail::Fingerprint fp;
  fp.add(dim_);
  fp.add(intrinsic_dim_);
  for (const auto& axis : coords_) fp.add(std::span<const double>(axis));
  fp.add(std::span<const double>(weights_));
  id_ = "sp-" + fp.hex();
}

std::vector<double> DiscreteSpace::point(Index i) const {
  std::vector<double> p(static_cast<std::size_t>(dim_));
  for (int a = 0; a < dim_; ++a) p[static_cast<std::size_t>(a)] = coord(i, a);
  return p;
}

double DiscreteSpace::distance(Index i, Index j) const {
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double d = coord(i, a) - coord(j, a);
    s += d * d;
  }
  return std::sqrt(s);
}

double DiscreteSpace::distance_to(Index i, std::span<const double> x) const {
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double d = coord(i, a) - x[static_cast<std::size_t>(a)];
    s += d * d;
  }
  return std::sqrt(s);
}

double DiscreteSpace::nearest_neighbor_distance(Index i) const {
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < size(); ++j) {
    if (j != i) best = std::min(best, distance(i, j));
  }
  return best;
}

double DiscreteSpace::min_pairwise_distance() const {
  double best2 = std::numeric_limits<double>::infinity();
  const Index n = size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < dim_; ++a) {
        const double d = coord(i, a) - coord(j, a);
        s += d * d;
      }
      best2 = std::min(best2, s);
    }
  }
  return std::sqrt(best2);
}

double DiscreteSpace::bounding_box_diameter() const {
  double s = 0.0;
  for (const auto& axis : coords_) {
    const auto [lo, hi] = std::minmax_element(axis.begin(), axis.end());
    s += (*hi - *lo) * (*hi - *lo);
  }
  return std::sqrt(s);
}

RegionMask::RegionMask(std::string space_id, Index space_size, std::vector<Index> indices)
    : space_id_(std::move(space_id)), space_size_(space_size), indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  if (!indices_.empty() && (indices_.front() < 0 || indices_.back() >= space_size_)) {
    throw Error(ErrorKind::invalid_argument, "mask index out of range [0, " + std::to_string(space_size_) + ")");
  }
}

RegionMask RegionMask::full(const DiscreteSpace& space) {
  std::vector<Index> idx(static_cast<std::size_t>(space.size()));
  for (Index i = 0; i < space.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return RegionMask(space.id(), space.size(), std::move(idx));
}

RegionMask RegionMask::empty(const DiscreteSpace& space) { return RegionMask(space.id(), space.size(), {}); }

bool RegionMask::contains(Index i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

void RegionMask::require_same_space(const RegionMask& other) const {
  balayage::require_same_space(space_id_, other.space_id_, "mask");
}

bool RegionMask::is_subset_of(const RegionMask& other) const {
  require_same_space(other);
  return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(), indices_.end());
}

RegionMask RegionMask::complement() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(space_size_ - size()));
  auto it = indices_.begin();
  for (Index i = 0; i < space_size_; ++i) {
    if (it != indices_.end() && *it == i) {
      ++it;
    } else {
      out.push_back(i);
    }
  }
  return RegionMask(space_id_, space_size_, std::move(out));
}

RegionMask RegionMask::unite(const RegionMask& other) const {
  require_same_space(other);
  std::vector<Index> out;
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(), std::back_inserter(out));
  return RegionMask(space_id_, space_size_, std::move(out));
}

RegionMask RegionMask::intersect(const RegionMask& other) const {
  require_same_space(other);
  std::vector<Index> out;
  std::set_intersection(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                        std::back_inserter(out));
  return RegionMask(space_id_, space_size_, std::move(out));
}

DiscreteMeasure::DiscreteMeasure(std::string space_id, Eigen::VectorXd weights)
    : space_id_(std::move(space_id)), weights_(std::move(weights)) {
  for (Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw Error(ErrorKind::invalid_argument, "measure weights must be finite and >= 0 (index " + std::to_string(i) + ")");
    }
  }
}

DiscreteMeasure DiscreteMeasure::zero(const DiscreteSpace& space) {
  return DiscreteMeasure(space.id(), Eigen::VectorXd::Zero(space.size()));
}

DiscreteMeasure DiscreteMeasure::point_mass(const DiscreteSpace& space, Index i, double mass) {
  if (i < 0 || i >= space.size()) throw Error(ErrorKind::invalid_argument, "point index out of range");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(space.size());
  w[i] = mass;
  return DiscreteMeasure(space.id(), std::move(w));
}

std::vector<Index> DiscreteMeasure::support() const {
  std::vector<Index> s;
  for (Index i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) s.push_back(i);
  }
  return s;
}

SignedMeasure SignedMeasure::from_positive(DiscreteMeasure m) {
  DiscreteMeasure zero(m.space_id(), Eigen::VectorXd::Zero(m.size()));
  return SignedMeasure{std::move(m), std::move(zero)};
}

DiscreteSpace build_grid(const Box& box, std::span<const int> resolution) {
  const std::size_t n = box.lower.size();
  if (n == 0 || box.upper.size() != n || resolution.size() != n) {
    throw Error(ErrorKind::invalid_argument, "box bounds and resolution must share one nonzero dimension");
  }
  std::vector<double> step(n);
  std::size_t count = 1;
  double volume = 1.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (resolution[a] < 1) throw Error(ErrorKind::invalid_argument, "grid resolution must be >= 1 per axis");
    const double len = box.upper[a] - box.lower[a];
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw Error(ErrorKind::degenerate_geometry, "box has zero extent along axis " + std::to_string(a));
    }
    step[a] = len / resolution[a];
    volume *= step[a];
    count *= static_cast<std::size_t>(resolution[a]);
  }

  std::vector<double> points;
  points.reserve(count * n);
  std::vector<int> idx(n, 0);
  for (std::size_t k = 0; k < count; ++k) {
    // first axis varies slowest
    for (std::size_t a = 0; a < n; ++a) points.push_back(box.lower[a] + (idx[a] + 0.5) * step[a]);
    for (std::size_t a = n; a-- > 0;) {
      if (++idx[a] < resolution[a]) break;
      idx[a] = 0;
    }
  }
  return DiscreteSpace(static_cast<int>(n), std::move(points), std::vector<double>(count, volume));
}

DiscreteSpace build_grid(const Box& box, int resolution) {
  std::vector<int> res(box.lower.size(), resolution);
  return build_grid(box, std::span<const int>(res));
}

DiscreteSpace build_sphere(std::span<const double> center, double radius, int count) {
  if (center.size() != 3) {
    throw Error(ErrorKind::unsupported_dimension, "sphere sampling requires n = 3, got n = " + std::to_string(center.size()));
  }
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_argument, "sphere radius must be > 0");
  if (count < 4) throw Error(ErrorKind::invalid_argument, "sphere sampling requires count >= 4");

  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(count) * 3);
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * k;
    points.push_back(center[0] + radius * rho * std::cos(phi));
    points.push_back(center[1] + radius * rho * std::sin(phi));
    points.push_back(center[2] + radius * z);
  }
  const double area = 4.0 * std::numbers::pi * radius * radius / count;
  return DiscreteSpace(3, std::move(points), std::vector<double>(static_cast<std::size_t>(count), area), 2);
}

RegionMask mask_from_predicate(const DiscreteSpace& space, const std::function<bool(std::span<const double>)>& predicate) {
  std::vector<Index> idx;
  std::vector<double> p(static_cast<std::size_t>(space.dim()));
  for (Index i = 0; i < space.size(); ++i) {
    for (int a = 0; a < space.dim(); ++a) p[static_cast<std::size_t>(a)] = space.coord(i, a);
    if (predicate(p)) idx.push_back(i);
  }
  return RegionMask(space.id(), space.size(), std::move(idx));
}

RegionMask mask_ball(const DiscreteSpace& space, std::span<const double> center, double radius) {
  if (center.size() != static_cast<std::size_t>(space.dim())) {
    throw Error(ErrorKind::invalid_argument, "ball center dimension does not match the space");
  }
  std::vector<Index> idx;
  for (Index i = 0; i < space.size(); ++i) {
    if (space.distance_to(i, center) <= radius) idx.push_back(i);
  }
  return RegionMask(space.id(), space.size(), std::move(idx));
}

SignedMeasure hahn_jordan(const std::string& space_id, std::span<const double> raw_weights) {
  const auto n = static_cast<Index>(raw_weights.size());
  Eigen::VectorXd plus = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd minus = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const double v = raw_weights[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite weight at index " + std::to_string(i));
    if (v > 0.0) plus[i] = v;
    if (v < 0.0) minus[i] = -v;
  }
  return SignedMeasure{DiscreteMeasure(space_id, std::move(plus)), DiscreteMeasure(space_id, std::move(minus))};
}

}  // namespace balayage
