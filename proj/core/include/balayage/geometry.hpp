#pragma once

#include "balayage/error.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace balayage {

using Index = Eigen::Index;

/// Axis-aligned box [lower, upper] in R^n.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Finite point set in R^n with positive per-point cell weights.
///
/// Coordinates are stored per axis (structure of arrays). The space is
/// immutable after construction and identified by a content fingerprint,
/// so measures and masks can be checked against the space they were built on.
class DiscreteSpace {
 public:
  /// `points` holds N points of `dim` coordinates each, row-major.
  /// `intrinsic_dim` is the dimension the cell weights measure (n for volume
  /// cells, n-1 for surface patches); 0 means "same as dim".
  DiscreteSpace(int dim, std::vector<double> points, std::vector<double> cell_weights, int intrinsic_dim = 0);

  int dim() const noexcept { return dim_; }
  int intrinsic_dim() const noexcept { return intrinsic_dim_; }
  Index size() const noexcept { return static_cast<Index>(weights_.size()); }
  const std::string& id() const noexcept { return id_; }

  double coord(Index i, int axis) const { return coords_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(i)]; }
  std::vector<double> point(Index i) const;
  std::span<const double> axis(int a) const { return coords_[static_cast<std::size_t>(a)]; }
  double cell_weight(Index i) const { return weights_[static_cast<std::size_t>(i)]; }
  std::span<const double> cell_weights() const noexcept { return weights_; }

  double distance(Index i, Index j) const;
  double distance_to(Index i, std::span<const double> x) const;

  /// Distance from point i to its nearest neighbour (+inf for a single point).
  double nearest_neighbor_distance(Index i) const;
  double min_pairwise_distance() const;
  double bounding_box_diameter() const;

 private:
  int dim_;
  int intrinsic_dim_;
  std::vector<std::vector<double>> coords_;
  std::vector<double> weights_;
  std::string id_;
};

/// Sorted, duplicate-free subset of the indices of a space.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(std::string space_id, Index space_size, std::vector<Index> indices);

  static RegionMask full(const DiscreteSpace& space);
  static RegionMask empty(const DiscreteSpace& space);

  const std::string& space_id() const noexcept { return space_id_; }
  Index space_size() const noexcept { return space_size_; }
  const std::vector<Index>& indices() const noexcept { return indices_; }
  Index size() const noexcept { return static_cast<Index>(indices_.size()); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(Index i) const;

  bool is_subset_of(const RegionMask& other) const;
  RegionMask complement() const;
  RegionMask unite(const RegionMask& other) const;
  RegionMask intersect(const RegionMask& other) const;

  friend bool operator==(const RegionMask& a, const RegionMask& b) {
    return a.space_id_ == b.space_id_ && a.indices_ == b.indices_;
  }

 private:
  void require_same_space(const RegionMask& other) const;

  std::string space_id_;
  Index space_size_ = 0;
  std::vector<Index> indices_;
};

/// Nonnegative measure: weights[i] is the mass carried by point i.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::string space_id, Eigen::VectorXd weights);

  static DiscreteMeasure zero(const DiscreteSpace& space);
  static DiscreteMeasure point_mass(const DiscreteSpace& space, Index i, double mass = 1.0);

  const std::string& space_id() const noexcept { return space_id_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Index size() const noexcept { return weights_.size(); }
  double total_mass() const { return weights_.sum(); }
  std::vector<Index> support() const;
  bool is_zero() const { return (weights_.array() == 0.0).all(); }

 private:
  std::string space_id_;
  Eigen::VectorXd weights_;
};

/// Signed measure in canonical Hahn-Jordan form: plus and minus have disjoint supports.
struct SignedMeasure {
  DiscreteMeasure plus;
  DiscreteMeasure minus;

  const std::string& space_id() const noexcept { return plus.space_id(); }
  Eigen::VectorXd weights() const { return plus.weights() - minus.weights(); }
  static SignedMeasure from_positive(DiscreteMeasure m);
};

DiscreteSpace build_grid(const Box& box, std::span<const int> resolution);
DiscreteSpace build_grid(const Box& box, int resolution);

/// Fibonacci-lattice sampling of a sphere in R^3; every cell carries area 4*pi*r^2/count.
DiscreteSpace build_sphere(std::span<const double> center, double radius, int count);

RegionMask mask_from_predicate(const DiscreteSpace& space, const std::function<bool(std::span<const double>)>& predicate);
RegionMask mask_ball(const DiscreteSpace& space, std::span<const double> center, double radius);

SignedMeasure hahn_jordan(const std::string& space_id, std::span<const double> raw_weights);

void require_same_space(const std::string& expected, const std::string& actual, const char* what);

}  // namespace balayage
