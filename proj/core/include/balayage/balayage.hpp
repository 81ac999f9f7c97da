#pragma once

#include "balayage/error.hpp"
#include "balayage/geometry.hpp"
#include "balayage/kernel.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace balayage {

enum class SolveMethod { active_set, projected_gradient };

const char* to_string(SolveMethod method);
SolveMethod parse_solve_method(const std::string& name);

struct SolveOptions {
  double tolerance = 1e-10;     // relative KKT tolerance
  Index max_iterations = 0;     // 0 selects 50 * N
  SolveMethod method = SolveMethod::active_set;

  void validate() const;
  Index iteration_cap(Index n) const { return max_iterations > 0 ? max_iterations : 50 * std::max<Index>(n, 1); }
};

/// Absolute floor for residual scales, so that a zero measure has a usable scale.
constexpr double kScaleFloor = 1e-14;

/// Swept measure mu^A with its optimality certificate.
///
/// With g = gram * (swept - mu):
///  - stationarity    = max |g_i| over the active set,
///  - feasibility     = max(0, -min g_i over A),
///  - complementarity = max swept_i * g_i over A.
/// `scale` = max(||gram * mu||_inf, kScaleFloor). The relative residuals divide
/// stationarity and feasibility by scale, and complementarity by
/// scale * max(||swept||_inf, 1) so that it is invariant under scaling of mu.
struct BalayageResult {
  DiscreteMeasure swept;
  std::vector<Index> active_set;
  double kkt_stationarity = 0.0;
  double kkt_feasibility = 0.0;
  double kkt_complementarity = 0.0;
  double distance = 0.0;  // ||mu - swept||
  Index iterations = 0;
  double scale = kScaleFloor;
  bool outer = false;
  SolveMethod method = SolveMethod::active_set;

  // Domination diagnostic: indices off A where kappa(swept) > kappa(mu) + tol * scale.
  Index domination_violations = 0;
  double worst_domination_violation = 0.0;
  // Indices of A where kappa(swept) > kappa(mu) + tol * scale (the cone constraint is active
  // with a strict inequality, so equality of potentials on A fails).
  Index clipped_on_mask = 0;

  double relative_stationarity() const { return kkt_stationarity / scale; }
  double relative_feasibility() const { return kkt_feasibility / scale; }
  double relative_complementarity() const;
  double max_relative_residual() const;
  /// No violation of kappa(swept) <= kappa(mu) anywhere, so kappa(swept) = kappa(mu) on A.
  bool domination_passes() const { return domination_violations == 0 && clipped_on_mask == 0; }
};

/// Raised when the solver exhausts its iteration budget; carries the best iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, BalayageResult best)
      : Error(ErrorKind::non_convergence, what), best_(std::move(best)) {}
  const BalayageResult& best() const noexcept { return best_; }

 private:
  BalayageResult best_;
};

/// Inner balayage: the energy-metric projection of mu onto the cone of
/// nonnegative measures carried by A.
BalayageResult sweep(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask,
                     const SolveOptions& opts = {});

/// Same as sweep, starting the active-set search from `warm_start` (global indices).
BalayageResult sweep_warm(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask,
                          const SolveOptions& opts, const std::vector<Index>& warm_start);

/// Outer balayage. Every subset of a finite space is Borel, so this coincides
/// with the inner balayage; the result is flagged as outer.
BalayageResult outer_sweep(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask,
                           const SolveOptions& opts = {});

struct SignedBalayageResult {
  BalayageResult plus;
  BalayageResult minus;
  Eigen::VectorXd combined;  // plus.swept - minus.swept
};

SignedBalayageResult sweep_signed(const EnergyForm& form, const SignedMeasure& mu, const RegionMask& mask,
                                  const SolveOptions& opts = {});

/// |kappa(mu^A, nu) - kappa(mu, nu^A)| / max(1, |kappa(mu^A, nu)|).
double symmetry_residual(const EnergyForm& form, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const RegionMask& mask, const SolveOptions& opts = {});

struct TestFamily;

struct Certificate {
  bool certified = false;
  Index worst_member = -1;
  double residual = 0.0;  // worst relative residual over the family
  std::string explanation;
};

/// Checks kappa(xi, lambda) = kappa(lambda^A, mu) for every member lambda of the family.
Certificate certify(const EnergyForm& form, const DiscreteMeasure& xi, const DiscreteMeasure& mu,
                    const RegionMask& mask, const TestFamily& family, const SolveOptions& opts = {},
                    double certification_tolerance = 1e-8);

}  // namespace balayage
