#pragma once

#include "balayage/balayage.hpp"

#include <string>
#include <vector>

namespace balayage {

/// Finite family of test measures whose potentials probe measures through
/// the pairing lambda -> integral of kappa(lambda) d nu.
struct TestFamily {
  std::vector<SignedMeasure> members;
  std::string provenance;
};

/// Unit point masses of the space. Their potentials are the Gram columns,
/// which span R^N because the Gram matrix is positive definite.
TestFamily build_default_family(const EnergyForm& form);

/// True when the family potentials span R^N (numerical rank test).
bool family_spans(const EnergyForm& form, const TestFamily& family);

struct ExhaustionStage {
  RegionMask mask;
  DiscreteMeasure swept;
  double distance = 0.0;  // ||mu - mu^{A_j}||
  double step = 0.0;      // ||mu^{A_j} - mu^{A_{j+1}}||, 0 for the last stage
  Eigen::VectorXd potential;
  Index active_set_size = 0;
  Index domination_violations = 0;
  bool domination_passes = true;
  Index iterations = 0;
};

struct ExhaustionReport {
  std::vector<ExhaustionStage> stages;
  DiscreteMeasure direct;         // sweep of mu onto the last mask, solved from scratch
  double final_discrepancy = 0.0; // ||mu^{A_J} - mu^A||
  double scale = kScaleFloor;     // ||gram * mu||_inf
};

/// Sweeps mu onto each of an increasing sequence of masks, warm-starting every
/// stage from the previous active set, and compares the last stage against a
/// cold solve.
ExhaustionReport exhaust(const EnergyForm& form, const DiscreteMeasure& mu, const std::vector<RegionMask>& masks,
                         const SolveOptions& opts = {});

/// A_j = A intersected with U_j, dropping repeats so the result is strictly increasing.
std::vector<RegionMask> exhaustion_masks(const RegionMask& target, const std::vector<RegionMask>& exhaustion);

/// Default exhaustion: balls of radii (j/stages) * R around the bounding-box
/// centre, R large enough to cover the whole space.
std::vector<RegionMask> default_exhaustion(const DiscreteSpace& space, const RegionMask& target, int stages);

struct ContractionCheck {
  double lhs = 0.0;  // ||mu^{A_j} - mu^{A_p}||^2
  double rhs = 0.0;  // ||mu - mu^{A_j}||^2 - ||mu - mu^{A_p}||^2
  bool holds = false;
};

/// Projection inequality for nested cones; slack 1e-10 * ||mu||^2.
ContractionCheck contraction_check(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& inner,
                                   const RegionMask& outer, const SolveOptions& opts = {});

struct VagueConvergenceReport {
  std::vector<double> member_residuals;  // |<kappa lambda, nu_K - nu_0>| at the last element
  std::vector<double> history;           // worst member residual per sequence element
  Index worst_member = -1;
  double worst_residual = 0.0;
  bool pass = false;
  double direct_residual = 0.0;  // max-norm of nu_K - nu_0
  bool direct_pass = false;
  bool views_agree = false;
  bool span_deficient = false;
};

VagueConvergenceReport vague_convergence_check(const EnergyForm& form, const TestFamily& family,
                                               const std::vector<DiscreteMeasure>& sequence,
                                               const DiscreteMeasure& limit, double tolerance);

struct EqualityReport {
  bool pass = false;
  Index worst_member = -1;
  double worst_residual = 0.0;
  bool span_deficient = false;
  /// Amplification from pairing residuals to weight differences: when the family
  /// spans, max|mu - nu| <= tolerance * amplification.
  double amplification = 0.0;
  double weight_bound = 0.0;
};

EqualityReport measure_equality_check(const EnergyForm& form, const TestFamily& family, const DiscreteMeasure& mu,
                                      const DiscreteMeasure& nu, double tolerance);

}  // namespace balayage
