#include "balayage/balayage.hpp"

#include "balayage/convergence.hpp"
#include "cone_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace balayage {

const char* to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::active_set: return "active_set";
    case SolveMethod::projected_gradient: return "projected_gradient";
  }
  return "unknown";
}

SolveMethod parse_solve_method(const std::string& name) {
  if (name == "active_set") return SolveMethod::active_set;
  if (name == "projected_gradient") return SolveMethod::projected_gradient;
  throw Error(ErrorKind::config, "unknown solver method '" + name + "' (expected active_set or projected_gradient)");
}

void SolveOptions::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw Error(ErrorKind::invalid_argument, "solver tolerance must be > 0");
  if (max_iterations < 0) throw Error(ErrorKind::invalid_argument, "max_iterations must be >= 1");
}

double BalayageResult::relative_complementarity() const {
  const double mass_scale = std::max(1.0, swept.size() ? swept.weights().maxCoeff() : 0.0);
  return kkt_complementarity / (scale * mass_scale);
}

double BalayageResult::max_relative_residual() const {
  return std::max({relative_stationarity(), relative_feasibility(), relative_complementarity()});
}

namespace {

void check_inputs(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask) {
  require_same_space(form.space_id(), mu.space_id(), "measure");
  require_same_space(form.space_id(), mask.space_id(), "mask");
  if (mu.size() != form.size()) throw Error(ErrorKind::space_mismatch, "measure length does not match the form");
}

// Fills residuals, distance and diagnostics from the swept weights.
void certify_result(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask, double tolerance,
                    BalayageResult& r) {
  const Eigen::VectorXd& w = r.swept.weights();
  const Eigen::VectorXd diff = w - mu.weights();
  const Eigen::VectorXd g = form.gram() * diff;
  r.distance = std::sqrt(std::max(0.0, diff.dot(g)));

  r.active_set.clear();
  r.kkt_stationarity = 0.0;
  r.kkt_complementarity = 0.0;
  double min_g = 0.0;
  const double slack = tolerance * r.scale;
  r.clipped_on_mask = 0;
  for (Index i : mask.indices()) {
    if (w[i] > 0.0) {
      r.active_set.push_back(i);
      r.kkt_stationarity = std::max(r.kkt_stationarity, std::abs(g[i]));
    }
    r.kkt_complementarity = std::max(r.kkt_complementarity, w[i] * std::abs(g[i]));
    min_g = std::min(min_g, g[i]);
    if (g[i] > slack) ++r.clipped_on_mask;
  }
  r.kkt_feasibility = std::max(0.0, -min_g);

  r.domination_violations = 0;
  r.worst_domination_violation = 0.0;
  std::size_t k = 0;
  const auto& idx = mask.indices();
  for (Index i = 0; i < form.size(); ++i) {
    if (k < idx.size() && idx[k] == i) {
      ++k;
      continue;
    }
    if (g[i] > slack) {
      ++r.domination_violations;
      r.worst_domination_violation = std::max(r.worst_domination_violation, g[i] / r.scale);
    }
  }
}

BalayageResult sweep_impl(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask,
                          const SolveOptions& opts, const std::vector<Index>* warm_global) {
  opts.validate();
  check_inputs(form, mu, mask);
  const Index n = form.size();
  const Eigen::VectorXd kmu = form.gram() * mu.weights();

  BalayageResult result;
  result.method = opts.method;
  result.scale = std::max(kmu.size() ? kmu.cwiseAbs().maxCoeff() : 0.0, kScaleFloor);

  Eigen::VectorXd swept = Eigen::VectorXd::Zero(n);
  bool converged = true;
  if (!mask.empty()) {
    const auto& idx = mask.indices();
    Eigen::VectorXd target(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) target[static_cast<Index>(k)] = kmu[idx[k]];
    detail::ConeProblem problem{form.gram(), idx, std::move(target), result.scale};

    std::vector<Index> warm_local;
    if (warm_global != nullptr) {
      for (Index g : *warm_global) {
        const auto it = std::lower_bound(idx.begin(), idx.end(), g);
        if (it != idx.end() && *it == g) warm_local.push_back(static_cast<Index>(it - idx.begin()));
      }
    }
    detail::ConeSolution sol;
    const Index cap = opts.iteration_cap(n);
    if (opts.method == SolveMethod::active_set) {
      sol = detail::solve_active_set(problem, opts.tolerance, cap, warm_local, form.factor());
    } else {
      Eigen::VectorXd start;
      if (!warm_local.empty()) {
        start = Eigen::VectorXd::Zero(static_cast<Index>(idx.size()));
        for (Index l : warm_local) start[l] = mu.weights()[idx[static_cast<std::size_t>(l)]];
      }
      sol = detail::solve_projected_gradient(problem, opts.tolerance, cap, warm_local.empty() ? nullptr : &start);
    }
    for (std::size_t k = 0; k < idx.size(); ++k) swept[idx[k]] = std::max(0.0, sol.x[static_cast<Index>(k)]);
    result.iterations = sol.iterations;
    converged = sol.converged;
  }
  result.swept = DiscreteMeasure(form.space_id(), std::move(swept));
  certify_result(form, mu, mask, opts.tolerance, result);

  if (!converged || result.max_relative_residual() > opts.tolerance) {
    std::ostringstream os;
    os << "balayage solver (" << to_string(opts.method) << ") did not reach tolerance " << opts.tolerance << " within "
       << opts.iteration_cap(n) << " iterations: stationarity " << result.relative_stationarity() << ", feasibility "
       << result.relative_feasibility() << ", complementarity " << result.relative_complementarity();
    throw ConvergenceError(os.str(), std::move(result));
  }
  return result;
}

}  // namespace

BalayageResult sweep(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask, const SolveOptions& opts) {
  return sweep_impl(form, mu, mask, opts, nullptr);
}

BalayageResult sweep_warm(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask,
                          const SolveOptions& opts, const std::vector<Index>& warm_start) {
  return sweep_impl(form, mu, mask, opts, &warm_start);
}

BalayageResult outer_sweep(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask,
                           const SolveOptions& opts) {
  BalayageResult r = sweep(form, mu, mask, opts);
  r.outer = true;
  return r;
}

SignedBalayageResult sweep_signed(const EnergyForm& form, const SignedMeasure& mu, const RegionMask& mask,
                                  const SolveOptions& opts) {
  SignedBalayageResult out{sweep(form, mu.plus, mask, opts), sweep(form, mu.minus, mask, opts), {}};
  out.combined = out.plus.swept.weights() - out.minus.swept.weights();
  return out;
}

double symmetry_residual(const EnergyForm& form, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const RegionMask& mask, const SolveOptions& opts) {
  const auto mu_a = sweep(form, mu, mask, opts);
  const auto nu_a = sweep(form, nu, mask, opts);
  const double lhs = inner_product(form, mu_a.swept, nu);
  const double rhs = inner_product(form, mu, nu_a.swept);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

Certificate certify(const EnergyForm& form, const DiscreteMeasure& xi, const DiscreteMeasure& mu,
                    const RegionMask& mask, const TestFamily& family, const SolveOptions& opts,
                    double certification_tolerance) {
  Certificate cert;
  if (family.members.empty()) {
    cert.explanation = "empty test family: nothing determines the swept measure";
    return cert;
  }
  check_inputs(form, xi, mask);
  check_inputs(form, mu, mask);
  const Eigen::VectorXd kxi = form.gram() * xi.weights();
  const Eigen::VectorXd kmu = form.gram() * mu.weights();
  const double potential_scale = std::max(kmu.cwiseAbs().maxCoeff(), kScaleFloor);

  for (std::size_t m = 0; m < family.members.size(); ++m) {
    const SignedMeasure& lambda = family.members[m];
    require_same_space(form.space_id(), lambda.space_id(), "test family member");
    const auto swept = sweep_signed(form, lambda, mask, opts);
    const double lhs = lambda.weights().dot(kxi);
    const double rhs = swept.combined.dot(kmu);
    const double variation = lambda.plus.total_mass() + lambda.minus.total_mass();
    const double residual = std::abs(lhs - rhs) / (potential_scale * std::max(variation, kScaleFloor));
    if (cert.worst_member < 0 || residual > cert.residual) {
      cert.residual = residual;
      cert.worst_member = static_cast<Index>(m);
    }
  }
  cert.certified = cert.residual <= certification_tolerance;
  std::ostringstream os;
  os << (cert.certified ? "certified" : "rejected") << ": worst member " << cert.worst_member << ", relative residual "
     << cert.residual << " (tolerance " << certification_tolerance << ")";
  cert.explanation = os.str();
  return cert;
}

}  // namespace balayage
