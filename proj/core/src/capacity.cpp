#include "balayage/capacity.hpp"

#include "cone_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace balayage {

// The simplex-constrained problem min g'Kg, sum g = 1, g >= 0 on A is solved through
// its homogeneous form min 1/2 x'Kx - 1'x, x >= 0 on A: the minimizer satisfies
// Kx = 1 on its support and Kx >= 1 on A, so g = x / sum(x) with energy 1 / sum(x).
CapacityResult equilibrium(const EnergyForm& form, const RegionMask& mask, const SolveOptions& opts) {
  opts.validate();
  require_same_space(form.space_id(), mask.space_id(), "mask");
  const Index n = form.size();
  CapacityResult out;
  if (mask.empty()) {
    out.equilibrium = DiscreteMeasure(form.space_id(), Eigen::VectorXd::Zero(n));
    out.energy = std::numeric_limits<double>::infinity();
    out.capacity = 0.0;
    out.robin_constant = std::numeric_limits<double>::infinity();
    return out;
  }

  const auto& idx = mask.indices();
  const auto m = static_cast<Index>(idx.size());
  detail::ConeProblem problem{form.gram(), idx, Eigen::VectorXd::Ones(m), 1.0};
  detail::ConeSolution sol =
      opts.method == SolveMethod::active_set
          ? detail::solve_active_set(problem, opts.tolerance, opts.iteration_cap(n), {}, form.factor())
          : detail::solve_projected_gradient(problem, opts.tolerance, opts.iteration_cap(n));
  out.iterations = sol.iterations;
  const double total = sol.x.sum();
  if (!sol.converged || !(total > 0.0)) {
    std::ostringstream os;
    os << "equilibrium solver did not converge within " << opts.iteration_cap(n) << " iterations";
    throw Error(ErrorKind::non_convergence, os.str());
  }

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < m; ++k) gamma[idx[static_cast<std::size_t>(k)]] = std::max(0.0, sol.x[k]) / total;
  // renormalise after clamping so the mass is 1 to rounding
  gamma /= gamma.sum();

  const Eigen::VectorXd pot = form.gram() * gamma;
  out.energy = gamma.dot(pot);
  out.capacity = 1.0 / out.energy;
  out.robin_constant = out.energy;
  double min_on_mask = std::numeric_limits<double>::infinity();
  for (Index i : idx) {
    min_on_mask = std::min(min_on_mask, pot[i]);
    if (gamma[i] > 0.0) {
      out.support.push_back(i);
      out.potential_spread = std::max(out.potential_spread, std::abs(pot[i] - out.robin_constant));
    }
  }
  out.potential_spread /= out.robin_constant;
  out.feasibility_gap = std::max(0.0, out.robin_constant - min_on_mask) / out.robin_constant;
  out.equilibrium = DiscreteMeasure(form.space_id(), std::move(gamma));

  // the Robin constant read off the potential must agree with the energy
  const double robin_from_potential = pot[out.support.front()];
  if (std::abs(robin_from_potential - out.energy) > 1e-10 * out.energy) {
    std::ostringstream os;
    os << "equilibrium inconsistency: potential on support " << robin_from_potential << " vs energy " << out.energy;
    throw Error(ErrorKind::non_convergence, os.str());
  }
  return out;
}

double capacity(const EnergyForm& form, const RegionMask& mask, const SolveOptions& opts) {
  return mask.empty() ? 0.0 : equilibrium(form, mask, opts).capacity;
}

bool is_negligible(const RegionMask& mask) { return mask.empty(); }

}  // namespace balayage
