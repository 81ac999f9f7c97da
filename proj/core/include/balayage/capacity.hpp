#pragma once

#include "balayage/balayage.hpp"

namespace balayage {

/// Equilibrium measure of a mask: the probability measure on A of minimal energy.
struct CapacityResult {
  DiscreteMeasure equilibrium;
  double energy = 0.0;          // minimal kappa(gamma, gamma); +inf for an empty mask
  double capacity = 0.0;        // 1 / energy
  double robin_constant = 0.0;  // value of kappa(gamma) on supp(gamma)
  std::vector<Index> support;
  double potential_spread = 0.0;  // max deviation of kappa(gamma) from the Robin constant on the support, relative
  double feasibility_gap = 0.0;   // max(0, robin - min kappa(gamma) over A), relative
  Index iterations = 0;
};

CapacityResult equilibrium(const EnergyForm& form, const RegionMask& mask, const SolveOptions& opts = {});

/// Inner capacity of the mask; 0 for the empty mask.
double capacity(const EnergyForm& form, const RegionMask& mask, const SolveOptions& opts = {});

/// A set is negligible iff it carries no nonzero measure of finite energy. With
/// finite regularized diagonals every point carries one, so only the empty mask is.
bool is_negligible(const RegionMask& mask);

}  // namespace balayage
