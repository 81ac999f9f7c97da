#pragma once

#include "balayage/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace balayage {

enum class KernelFamily { riesz, newtonian, green_ball };

const char* to_string(KernelFamily family);

/// Kernel on R^n. Newtonian is riesz(2) with n >= 3; green_ball is the
/// Newtonian Green kernel of an open ball.
struct KernelSpec {
  KernelFamily family = KernelFamily::riesz;
  int dim = 3;
  double alpha = 2.0;
  std::vector<double> center;  // green_ball only
  double radius = 0.0;         // green_ball only

  static KernelSpec riesz(double alpha, int dim);
  static KernelSpec newtonian(int dim);
  static KernelSpec green_ball(std::vector<double> center, double radius);

  /// Throws on an invalid parameter combination.
  void validate() const;
  /// Riesz exponent of the singular part (2 for newtonian and green_ball).
  double exponent() const { return family == KernelFamily::riesz ? alpha : 2.0; }
  /// True when the energy, consistency and domination principles are known to hold.
  bool principles_hold() const { return exponent() <= 2.0; }
  std::string describe() const;
};

/// Kernel value; +inf on the diagonal.
double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Self-energy regularization of the Gram diagonal.
///
/// The kernels are infinite on the diagonal, so each point mass is replaced by
/// a unit mass spread uniformly over a small cell of the point's weight:
///  - equal_volume_ball: mutual energy of the uniform ball of equal volume with itself;
///  - equal_area_disk: potential at the centre of the uniform flat disk of equal area
///    (for surface samplings, intrinsic_dim = dim - 1);
///  - nearest_neighbor: kernel evaluated at half the nearest-neighbour distance;
///  - fixed: a user-supplied constant.
/// `automatic` picks equal_volume_ball for volume samplings and equal_area_disk for surfaces.
struct DiagRule {
  enum class Kind { automatic, equal_volume_ball, equal_area_disk, nearest_neighbor, fixed };
  Kind kind = Kind::automatic;
  double value = 0.0;

  static DiagRule fixed(double v) { return {Kind::fixed, v}; }
  std::string describe() const;
};

DiagRule::Kind parse_diag_rule_kind(const std::string& name);
const char* to_string(DiagRule::Kind kind);

/// E|X-Y|^(alpha-n) for X, Y independent and uniform in the unit ball of R^n.
double riesz_ball_constant(double alpha, int n);

/// Mean of |x|^(alpha-n) over the uniform m-dimensional flat disk of radius 1 centred at x = 0.
double riesz_flat_disk_center_potential(double alpha, int n, int m);

constexpr Index kMaxAssemblySize = 20000;

/// Symmetric strictly positive definite Gram matrix of a kernel on a discrete space.
///
/// gram(i, j) = kappa(x_i, x_j) for i != j; the diagonal follows the DiagRule.
/// Measure weights are point masses, so potentials are gram * weights and energies
/// are weights' * gram * weights.
class EnergyForm {
 public:
  /// Validates symmetry, nonnegativity and strict positive definiteness.
  static EnergyForm from_gram(std::string space_id, KernelSpec spec, Eigen::MatrixXd gram, DiagRule rule);

  const std::string& space_id() const noexcept { return space_id_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  const DiagRule& diag_rule() const noexcept { return rule_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  Index size() const noexcept { return gram_.rows(); }

  /// Cholesky factor of the full matrix computed during validation (null for very large forms).
  const Eigen::LLT<Eigen::MatrixXd>* factor() const noexcept { return factor_.get(); }

 private:
  EnergyForm() = default;

  std::string space_id_;
  KernelSpec spec_;
  DiagRule rule_;
  Eigen::MatrixXd gram_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
};

EnergyForm assemble(const KernelSpec& spec, const DiscreteSpace& space, DiagRule rule = {});

/// Diagonal entry the rule assigns to point i (rule kinds other than automatic).
double diagonal_entry(const KernelSpec& spec, const DiscreteSpace& space, Index i, const DiagRule& rule);

Eigen::VectorXd potential(const EnergyForm& form, const DiscreteMeasure& nu);
Eigen::VectorXd potential(const EnergyForm& form, const SignedMeasure& nu);

double inner_product(const EnergyForm& form, const DiscreteMeasure& mu, const DiscreteMeasure& nu);
double inner_product(const EnergyForm& form, const SignedMeasure& mu, const SignedMeasure& nu);
double energy_norm(const EnergyForm& form, const DiscreteMeasure& mu);
double energy_norm(const EnergyForm& form, const SignedMeasure& mu);

/// Energy norm of an arbitrary signed weight vector.
double energy_norm(const EnergyForm& form, const Eigen::VectorXd& weights);

/// Discrete domination principle. When the inverse Gram matrix has no positive
/// off-diagonal entry (gram is an inverse M-matrix), every sweep satisfies
/// kappa(mu^A) <= kappa(mu) everywhere with equality on A.
struct DominationReport {
  bool holds = false;
  double worst_offdiagonal = 0.0;  // max of inv(i,j) / sqrt(inv(i,i) inv(j,j)), i != j
  std::pair<Index, Index> worst_pair{-1, -1};
};

/// O(N^3); meant for diagnostics on small and medium forms.
DominationReport discrete_domination(const EnergyForm& form, double tolerance = 1e-12);

}  // namespace balayage
