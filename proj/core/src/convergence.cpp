#include "balayage/convergence.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace balayage {

namespace {

// Columns are the potentials of the family members.
Eigen::MatrixXd family_potentials(const EnergyForm& form, const TestFamily& family) {
  Eigen::MatrixXd p(form.size(), static_cast<Index>(family.members.size()));
  for (std::size_t m = 0; m < family.members.size(); ++m) {
    require_same_space(form.space_id(), family.members[m].space_id(), "test family member");
    p.col(static_cast<Index>(m)) = form.gram() * family.members[m].weights();
  }
  return p;
}

void require_family(const TestFamily& family) {
  if (family.members.empty()) throw Error(ErrorKind::invalid_argument, "test family is empty");
}

bool is_default_family(const EnergyForm& form, const TestFamily& family) {
  if (static_cast<Index>(family.members.size()) != form.size()) return false;
  for (std::size_t m = 0; m < family.members.size(); ++m) {
    const auto& w = family.members[m].plus.weights();
    if (!family.members[m].minus.is_zero() || w[static_cast<Index>(m)] != 1.0 || w.sum() != 1.0) return false;
  }
  return true;
}

}  // namespace

TestFamily build_default_family(const EnergyForm& form) {
  TestFamily family;
  family.members.reserve(static_cast<std::size_t>(form.size()));
  for (Index i = 0; i < form.size(); ++i) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(form.size());
    w[i] = 1.0;
    family.members.push_back(SignedMeasure::from_positive(DiscreteMeasure(form.space_id(), std::move(w))));
  }
  family.provenance = "unit point masses; potentials are the Gram columns and span R^N (positive definite Gram)";
  return family;
}

bool family_spans(const EnergyForm& form, const TestFamily& family) {
  if (static_cast<Index>(family.members.size()) < form.size()) return false;
  if (is_default_family(form, family)) return true;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(family_potentials(form, family));
  return qr.rank() == form.size();
}

ExhaustionReport exhaust(const EnergyForm& form, const DiscreteMeasure& mu, const std::vector<RegionMask>& masks,
                         const SolveOptions& opts) {
  if (masks.empty()) throw Error(ErrorKind::invalid_argument, "exhaustion needs at least one mask");
  for (std::size_t j = 0; j + 1 < masks.size(); ++j) {
    if (!masks[j].is_subset_of(masks[j + 1])) {
      throw Error(ErrorKind::nesting, "exhaustion masks are not nested: stage " + std::to_string(j) +
                                          " is not contained in stage " + std::to_string(j + 1));
    }
  }

  ExhaustionReport report;
  std::vector<Index> warm;
  for (std::size_t j = 0; j < masks.size(); ++j) {
    // previous support plus the points the new stage adds
    std::vector<Index> start = warm;
    if (j > 0) {
      std::set_difference(masks[j].indices().begin(), masks[j].indices().end(), masks[j - 1].indices().begin(),
                          masks[j - 1].indices().end(), std::back_inserter(start));
      std::sort(start.begin(), start.end());
    }
    BalayageResult r = j == 0 ? sweep(form, mu, masks[j], opts) : sweep_warm(form, mu, masks[j], opts, start);
    report.scale = r.scale;
    warm = r.active_set;

    ExhaustionStage stage;
    stage.mask = masks[j];
    stage.distance = r.distance;
    stage.potential = form.gram() * r.swept.weights();
    stage.active_set_size = static_cast<Index>(r.active_set.size());
    stage.domination_violations = r.domination_violations;
    stage.domination_passes = r.domination_passes();
    stage.iterations = r.iterations;
    stage.swept = std::move(r.swept);
    report.stages.push_back(std::move(stage));
  }
  for (std::size_t j = 0; j + 1 < report.stages.size(); ++j) {
    report.stages[j].step =
        energy_norm(form, Eigen::VectorXd(report.stages[j].swept.weights() - report.stages[j + 1].swept.weights()));
  }

  report.direct = sweep(form, mu, masks.back(), opts).swept;
  report.final_discrepancy =
      energy_norm(form, Eigen::VectorXd(report.stages.back().swept.weights() - report.direct.weights()));
  return report;
}

std::vector<RegionMask> exhaustion_masks(const RegionMask& target, const std::vector<RegionMask>& exhaustion) {
  std::vector<RegionMask> out;
  for (const auto& u : exhaustion) {
    RegionMask a = target.intersect(u);
    if (!out.empty() && !out.back().is_subset_of(a)) {
      throw Error(ErrorKind::nesting, "exhaustion sets are not increasing");
    }
    if (out.empty() || !(out.back() == a)) out.push_back(std::move(a));
  }
  if (out.empty() || !(out.back() == target)) out.push_back(target);
  return out;
}

std::vector<RegionMask> default_exhaustion(const DiscreteSpace& space, const RegionMask& target, int stages) {
  if (stages < 1) throw Error(ErrorKind::invalid_argument, "exhaustion needs at least one stage");
  std::vector<double> center(static_cast<std::size_t>(space.dim()));
  for (int a = 0; a < space.dim(); ++a) {
    const auto axis = space.axis(a);
    const auto [lo, hi] = std::minmax_element(axis.begin(), axis.end());
    center[static_cast<std::size_t>(a)] = 0.5 * (*lo + *hi);
  }
  double reach = 0.0;
  for (Index i = 0; i < space.size(); ++i) reach = std::max(reach, space.distance_to(i, center));
  std::vector<RegionMask> balls;
  for (int j = 1; j <= stages; ++j) balls.push_back(mask_ball(space, center, reach * j / stages));
  return exhaustion_masks(target, balls);
}

ContractionCheck contraction_check(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& inner,
                                   const RegionMask& outer, const SolveOptions& opts) {
  if (!inner.is_subset_of(outer)) throw Error(ErrorKind::nesting, "contraction check needs A_j contained in A_p");
  const auto rj = sweep(form, mu, inner, opts);
  const auto rp = sweep(form, mu, outer, opts);
  ContractionCheck out;
  const double step = energy_norm(form, Eigen::VectorXd(rj.swept.weights() - rp.swept.weights()));
  out.lhs = step * step;
  out.rhs = rj.distance * rj.distance - rp.distance * rp.distance;
  const double energy = std::max(inner_product(form, mu, mu), kScaleFloor);
  out.holds = out.lhs <= out.rhs + 1e-10 * energy;
  return out;
}

VagueConvergenceReport vague_convergence_check(const EnergyForm& form, const TestFamily& family,
                                               const std::vector<DiscreteMeasure>& sequence,
                                               const DiscreteMeasure& limit, double tolerance) {
  require_family(family);
  if (sequence.empty()) throw Error(ErrorKind::invalid_argument, "sequence is empty");
  require_same_space(form.space_id(), limit.space_id(), "limit measure");
  const Eigen::MatrixXd potentials = family_potentials(form, family);

  VagueConvergenceReport report;
  for (const auto& nu : sequence) {
    require_same_space(form.space_id(), nu.space_id(), "sequence element");
    const Eigen::VectorXd r = potentials.transpose() * (nu.weights() - limit.weights());
    report.history.push_back(r.cwiseAbs().maxCoeff());
  }
  const Eigen::VectorXd diff = sequence.back().weights() - limit.weights();
  const Eigen::VectorXd last = (potentials.transpose() * diff).cwiseAbs();
  report.member_residuals.assign(last.data(), last.data() + last.size());
  Index worst = 0;
  report.worst_residual = last.maxCoeff(&worst);
  report.worst_member = worst;
  report.pass = report.worst_residual <= tolerance;

  // The direct view uses the weight threshold that guarantees every pairing stays
  // within tolerance: |<kappa lambda, d>| <= ||kappa lambda||_1 * ||d||_inf.
  const double pairing_norm = potentials.cwiseAbs().colwise().sum().maxCoeff();
  report.direct_residual = diff.cwiseAbs().maxCoeff();
  report.direct_pass = report.direct_residual <= tolerance / std::max(pairing_norm, kScaleFloor);
  report.views_agree = report.pass == report.direct_pass;
  report.span_deficient = !family_spans(form, family);
  return report;
}

EqualityReport measure_equality_check(const EnergyForm& form, const TestFamily& family, const DiscreteMeasure& mu,
                                      const DiscreteMeasure& nu, double tolerance) {
  require_family(family);
  require_same_space(form.space_id(), mu.space_id(), "measure");
  require_same_space(form.space_id(), nu.space_id(), "measure");
  const Eigen::MatrixXd potentials = family_potentials(form, family);
  const Eigen::VectorXd r = (potentials.transpose() * (mu.weights() - nu.weights())).cwiseAbs();

  EqualityReport report;
  Index worst = 0;
  report.worst_residual = r.maxCoeff(&worst);
  report.worst_member = worst;
  report.pass = report.worst_residual <= tolerance;
  report.span_deficient = !family_spans(form, family);
  if (!report.span_deficient) {
    Eigen::MatrixXd inverse;
    if (is_default_family(form, family) && form.factor() != nullptr) {
      inverse = form.factor()->solve(Eigen::MatrixXd::Identity(form.size(), form.size()));
    } else {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(potentials.transpose());
      inverse = cod.pseudoInverse();
    }
    report.amplification = inverse.cwiseAbs().rowwise().sum().maxCoeff();
    report.weight_bound = tolerance * report.amplification;
  }
  return report;
}

}  // namespace balayage
