#include <doctest.h>

#include "fixtures.hpp"

#include <balayage/capacity.hpp>
#include <balayage/oracle.hpp>

#include <cmath>
#include <random>

using namespace balayage;
using namespace fixtures;

TEST_SUITE("capacity") {
  TEST_CASE("singleton with diagonal 2") {
    const EnergyForm f = two_point();
    const CapacityResult r = equilibrium(f, mask_of(f, {1}));
    CHECK(r.equilibrium.weights() == Eigen::Vector2d(0, 1));
    CHECK(r.energy == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r.capacity == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.support == std::vector<Index>{1});
  }

  TEST_CASE("symmetric two-point instance") {
    const EnergyForm f = two_point();
    const CapacityResult r = equilibrium(f, mask_of(f, {0, 1}));
    CHECK(std::abs(r.equilibrium.weights()[0] - 0.5) <= 1e-12);
    CHECK(std::abs(r.equilibrium.weights()[1] - 0.5) <= 1e-12);
    CHECK(std::abs(r.energy - 1.5) <= 1e-12);
    CHECK(std::abs(r.capacity - 2.0 / 3.0) <= 1e-12);
    CHECK(std::abs(r.robin_constant - 1.5) <= 1e-12);
    CHECK(std::abs(capacity(f, mask_of(f, {0, 1})) - 2.0 / 3.0) <= 1e-12);
  }

  TEST_CASE("clip instance reduced to a singleton") {
    const EnergyForm f = clip3();
    CHECK(capacity(f, mask_of(f, {0})) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("empty mask") {
    const EnergyForm f = two_point();
    const CapacityResult r = equilibrium(f, mask_of(f, {}));
    CHECK(r.capacity == 0.0);
    CHECK(std::isinf(r.energy));
    CHECK(r.equilibrium.is_zero());
    CHECK(capacity(f, mask_of(f, {})) == 0.0);
  }

  TEST_CASE("is_negligible") {
    const EnergyForm f = triangle();
    CHECK(is_negligible(mask_of(f, {})));
    CHECK_FALSE(is_negligible(mask_of(f, {2})));
    CHECK_FALSE(is_negligible(mask_of(f, {0, 1, 2})));
  }

  TEST_CASE("equilibrium KKT, simplex and sweep consistency on random masks") {
    std::mt19937_64 rng(21);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const RandomInstance inst = random_instance(seed, {2, 40, {2, 3}, {1.0, 1.5, 2.0}});
      if (inst.mask.empty()) continue;
      const CapacityResult r = equilibrium(inst.form, inst.mask);
      const Eigen::VectorXd& g = r.equilibrium.weights();
      CHECK(std::abs(g.sum() - 1.0) <= 1e-12);
      CHECK(g.minCoeff() >= 0.0);
      for (Index i = 0; i < g.size(); ++i) {
        if (!inst.mask.contains(i)) CHECK(g[i] == 0.0);
      }
      CHECK(r.potential_spread <= 1e-8);
      CHECK(r.feasibility_gap <= 1e-8);
      CHECK(std::abs(r.capacity * r.energy - 1.0) <= 1e-14);
      CHECK(std::abs(r.robin_constant - r.energy) <= 1e-10 * r.energy);

      const BalayageResult s = sweep(inst.form, r.equilibrium, inst.mask);
      CHECK((s.swept.weights() - g).cwiseAbs().maxCoeff() <= 1e-10);

      std::vector<Index> sub;
      for (Index i : inst.mask.indices()) {
        if (rng() % 2 == 0) sub.push_back(i);
      }
      const RegionMask smaller(inst.space.id(), inst.space.size(), sub);
      CHECK(capacity(inst.form, smaller) <= r.capacity + 1e-12);
    }
  }
}
