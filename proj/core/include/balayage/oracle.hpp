#pragma once

#include "balayage/balayage.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace balayage {

/// Side-by-side comparison of a main-solver value with an independent oracle.
struct OracleReport {
  std::string name;
  Eigen::VectorXd oracle_value;
  Eigen::VectorXd main_value;
  double discrepancy = 0.0;  // max|main - oracle| / max(||oracle||_inf, 1e-14)
  double threshold = 0.0;    // 10 x main tolerance
  bool flagged = false;
  double oracle_tolerance = 0.0;
  Index oracle_iterations = 0;
  std::string notes;
};

/// Flags when the discrepancy exceeds 10x the main solver tolerance.
OracleReport compare(const Eigen::VectorXd& main, const Eigen::VectorXd& oracle, double main_tolerance,
                     std::string name = "compare");

constexpr Index kBruteMaxPoints = 64;
constexpr Index kBruteMaxMask = 24;

struct BruteSweepResult {
  DiscreteMeasure swept;
  bool exact = false;         // true when every active-set candidate was enumerated
  Index candidates = 0;       // candidates enumerated (exact) or sweeps performed (iterative)
  double objective = 0.0;     // 1/2 x'Kx - b'x at the returned point
  std::string warning;
};

/// Global minimiser of ||mu - nu|| over nonnegative nu carried by A, by exhaustive
/// enumeration of active sets when N <= 64 and |A| <= 24; otherwise by projected
/// coordinate descent to relative tolerance 1e-13, with a warning.
BruteSweepResult brute_sweep(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask);

struct SphereMassReport {
  OracleReport report;    // oracle_value = r/|y|, main_value = swept mass
  int count = 0;
  double mass = 0.0;
  double classical = 0.0;
  double relative_error = 0.0;
  double max_relative_residual = 0.0;  // KKT certificate of the sphere solve
  Index active_set_size = 0;
};

/// Sweeps a unit point mass at distance `source_distance` from the centre onto a
/// `count`-point Fibonacci sphere of radius r with the Newtonian kernel in R^3 and
/// reports the swept mass against the classical value r/|y|.
SphereMassReport newtonian_sphere_mass(double radius, double source_distance, int count, const SolveOptions& opts = {});

/// Mass at each resolution of a refinement study.
std::vector<SphereMassReport> sphere_mass_refinement(double radius, double source_distance,
                                                     const std::vector<int>& counts, const SolveOptions& opts = {});

/// Richardson-style limit estimate from three masses at successively refined counts.
struct RefinementEstimate {
  bool convergent = false;  // successive differences shrink
  double ratio = 0.0;       // |m3 - m2| / |m2 - m1|
  double limit = 0.0;       // geometric-series extrapolation of the last mass
};
RefinementEstimate estimate_limit(double m1, double m2, double m3);

/// Random instance used by the verification suites. Points are drawn uniformly in
/// the unit cube subject to a hard-core separation, mu is uniform on a random
/// subset, and the mask is a random subset.
struct RandomInstance {
  std::uint64_t seed = 0;
  DiscreteSpace space;
  KernelSpec spec;
  EnergyForm form;
  DiscreteMeasure mu;
  RegionMask mask;
};

struct RandomInstanceOptions {
  Index min_points = 2;
  Index max_points = 12;
  std::vector<int> dims{2, 3};
  std::vector<double> alphas{1.0, 1.5, 2.0};
};

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& options = {});

enum class MaskShape { random_subset, ball, box };

/// Newtonian (n = 3) grid instance on the unit cube with random mu and a random mask.
RandomInstance random_grid_instance(std::uint64_t seed, int resolution, MaskShape shape = MaskShape::ball);

}  // namespace balayage
