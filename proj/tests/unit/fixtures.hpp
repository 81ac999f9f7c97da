#pragma once

#include <balayage/balayage.hpp>
#include <balayage/kernel.hpp>

#include <Eigen/Core>

#include <cmath>
#include <vector>

namespace fixtures {

using namespace balayage;

inline RegionMask mask_of(const EnergyForm& form, std::vector<Index> idx) {
  return RegionMask(form.space_id(), form.size(), std::move(idx));
}

inline DiscreteMeasure measure_of(const EnergyForm& form, std::vector<double> w) {
  return DiscreteMeasure(form.space_id(), Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Index>(w.size())));
}

inline EnergyForm from_rows(const char* id, std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Index>(rows.size());
  Eigen::MatrixXd g(n, n);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double v : row) g(i, j++) = v;
    ++i;
  }
  return EnergyForm::from_gram(id, KernelSpec::newtonian(3), g, DiagRule::fixed(g(0, 0)));
}

/// Two points at unit distance, Newtonian kernel, diagonal 2: gram [[2,1],[1,2]].
inline DiscreteSpace two_point_space() { return DiscreteSpace(3, {0, 0, 0, 1, 0, 0}, {1, 1}); }
inline EnergyForm two_point() { return assemble(KernelSpec::newtonian(3), two_point_space(), DiagRule::fixed(2.0)); }

/// gram [[2,1.9,1],[1.9,2,0.5],[1,0.5,2]]; the unconstrained sweep of e3 onto {0,1} goes negative.
inline EnergyForm clip3() { return from_rows("clip3", {{2, 1.9, 1}, {1.9, 2, 0.5}, {1, 0.5, 2}}); }

/// Equilateral triangle of side 2, Newtonian, diagonal 1: gram [[1,.5,.5],[.5,1,.5],[.5,.5,1]].
inline DiscreteSpace triangle_space() { return DiscreteSpace(3, {0, 0, 0, 2, 0, 0, 1, std::sqrt(3.0), 0}, {1, 1, 1}); }
inline EnergyForm triangle() { return assemble(KernelSpec::newtonian(3), triangle_space(), DiagRule::fixed(1.0)); }

}  // namespace fixtures
