#include <doctest.h>

#include "fixtures.hpp"

#include <balayage/balayage.hpp>
#include <balayage/convergence.hpp>
#include <balayage/oracle.hpp>

#include <cmath>
#include <random>

using namespace balayage;
using namespace fixtures;

TEST_SUITE("balayage") {
  TEST_CASE("two-point sweep") {
    const EnergyForm f = two_point();
    const DiscreteMeasure mu = measure_of(f, {0, 1});
    const BalayageResult r = sweep(f, mu, mask_of(f, {0}));
    CHECK(r.swept.weights()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.swept.weights()[1] == 0.0);
    CHECK(r.active_set == std::vector<Index>{0});
    const Eigen::VectorXd pa = potential(f, r.swept);
    CHECK(pa[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pa[1] == doctest::Approx(0.5).epsilon(1e-15));
    // ||e2 - e1/2||^2 = 2 - 1 + 0.5
    CHECK(r.distance * r.distance == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(r.max_relative_residual() <= 1e-10);
    CHECK(r.domination_passes());
  }

  TEST_CASE("sweep onto a superset of the support is the identity") {
    const EnergyForm f = triangle();
    const DiscreteMeasure mu = measure_of(f, {0.3, 0, 1.2});
    const BalayageResult r = sweep(f, mu, mask_of(f, {0, 2}));
    CHECK((r.swept.weights() - mu.weights()).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(r.distance == doctest::Approx(0.0));
  }

  TEST_CASE("clipping instance") {
    const EnergyForm f = clip3();
    const DiscreteMeasure mu = measure_of(f, {0, 0, 1});
    const BalayageResult r = sweep(f, mu, mask_of(f, {0, 1}));
    CHECK(std::abs(r.swept.weights()[0] - 0.5) <= 1e-12);
    CHECK(r.swept.weights()[1] == 0.0);
    CHECK(r.swept.weights()[2] == 0.0);
    CHECK(std::abs(r.distance * r.distance - 1.5) <= 1e-12);
    CHECK(r.active_set == std::vector<Index>{0});
    // KKT at index 1: (K swept)_1 = 0.95 >= (K mu)_1 = 0.5
    const Eigen::VectorXd g = potential(f, r.swept) - potential(f, mu);
    CHECK(g[1] == doctest::Approx(0.45));
    CHECK(r.clipped_on_mask == 1);
    CHECK_FALSE(r.domination_passes());
  }

  TEST_CASE("empty mask returns the zero measure") {
    const EnergyForm f = two_point();
    const DiscreteMeasure mu = measure_of(f, {0, 1});
    const BalayageResult r = sweep(f, mu, mask_of(f, {}));
    CHECK(r.swept.is_zero());
    CHECK(r.distance == doctest::Approx(energy_norm(f, mu)).epsilon(1e-15));
    CHECK(outer_sweep(f, mu, mask_of(f, {})).swept.is_zero());
  }

  TEST_CASE("sweep_signed examples") {
    const EnergyForm f = two_point();
    const RegionMask a = mask_of(f, {0});
    SUBCASE("positive measure") {
      const DiscreteMeasure mu = measure_of(f, {0, 1});
      const SignedBalayageResult s = sweep_signed(f, SignedMeasure::from_positive(mu), a);
      CHECK(s.combined == sweep(f, mu, a).swept.weights());
      CHECK(s.minus.swept.is_zero());
    }
    SUBCASE("parts already on the mask") {
      const EnergyForm t = triangle();
      const SignedMeasure m{measure_of(t, {0.7, 0, 0}), measure_of(t, {0, 0.7, 0})};
      const SignedBalayageResult s = sweep_signed(t, m, mask_of(t, {0, 1}));
      CHECK((s.combined - m.weights()).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("scaled hand solution") {
      const SignedMeasure m{measure_of(f, {0, 1}), measure_of(f, {0, 0.5})};
      const SignedBalayageResult s = sweep_signed(f, m, a);
      CHECK(s.combined[0] == doctest::Approx(0.25).epsilon(1e-15));
      CHECK(s.combined[1] == 0.0);
    }
  }

  TEST_CASE("outer_sweep is bit-identical to sweep") {
    const EnergyForm f = clip3();
    const DiscreteMeasure mu = measure_of(f, {0, 0, 1});
    const RegionMask a = mask_of(f, {0, 1});
    const BalayageResult inner = sweep(f, mu, a);
    const BalayageResult outer = outer_sweep(f, mu, a);
    CHECK(outer.outer);
    CHECK_FALSE(inner.outer);
    CHECK(outer.swept.weights() == inner.swept.weights());
    CHECK(outer.swept.weights()[0] == doctest::Approx(0.5).epsilon(1e-12));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const RandomInstance inst = random_instance(seed);
      CHECK(outer_sweep(inst.form, inst.mu, inst.mask).swept.weights() ==
            sweep(inst.form, inst.mu, inst.mask).swept.weights());
    }
  }

  TEST_CASE("symmetry_residual examples") {
    const EnergyForm f = two_point();
    const DiscreteMeasure mu = measure_of(f, {0, 1});
    const DiscreteMeasure nu = measure_of(f, {1, 0});
    CHECK(symmetry_residual(f, mu, nu, mask_of(f, {0})) <= 1e-15);
    CHECK(symmetry_residual(f, mu, mu, mask_of(f, {0})) == 0.0);
    CHECK(symmetry_residual(f, mu, nu, mask_of(f, {0, 1})) <= 1e-15);
  }

  TEST_CASE("certify examples") {
    const EnergyForm f = triangle();
    const DiscreteMeasure mu = measure_of(f, {0, 0, 1});
    const RegionMask a = mask_of(f, {0, 1});
    const TestFamily family = build_default_family(f);
    const DiscreteMeasure xi = sweep(f, mu, a).swept;
    const Certificate ok = certify(f, xi, mu, a, family);
    CHECK(ok.certified);
    CHECK(ok.residual <= 1e-8);

    Eigen::VectorXd w = xi.weights();
    w[1] += 0.1;
    const Certificate bad = certify(f, DiscreteMeasure(f.space_id(), w), mu, a, family);
    CHECK_FALSE(bad.certified);
    CHECK(bad.residual > 0.0);
    CHECK(bad.worst_member >= 0);

    const Certificate arbitrary = certify(f, measure_of(f, {0.2, 0.2, 0.2}), mu, a, family);
    CHECK_FALSE(arbitrary.certified);

    const Certificate none = certify(f, xi, mu, a, TestFamily{});
    CHECK_FALSE(none.certified);
    CHECK_FALSE(none.explanation.empty());
  }

  TEST_CASE("KKT certificate, idempotence, homogeneity and minimality on random instances") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const RandomInstance inst = random_instance(seed, {2, 30, {2, 3}, {1.0, 1.5, 2.0}});
      const BalayageResult r = sweep(inst.form, inst.mu, inst.mask);
      CHECK(r.max_relative_residual() <= 1e-10);
      for (Index i = 0; i < r.swept.size(); ++i) {
        if (!inst.mask.contains(i)) CHECK(r.swept.weights()[i] == 0.0);
      }
      const BalayageResult again = sweep(inst.form, r.swept, inst.mask);
      const double base = std::max(r.swept.weights().cwiseAbs().maxCoeff(), 1e-300);
      CHECK((again.swept.weights() - r.swept.weights()).cwiseAbs().maxCoeff() <= 1e-10 * base);

      const DiscreteMeasure scaled(inst.space.id(), 3.5 * inst.mu.weights());
      const BalayageResult rs = sweep(inst.form, scaled, inst.mask);
      CHECK((rs.swept.weights() - 3.5 * r.swept.weights()).cwiseAbs().maxCoeff() <= 1e-10 * 3.5 * base);

      const double scale = r.scale;
      for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(inst.space.size());
        for (Index i : inst.mask.indices()) w[i] = u(rng) < 0.3 ? 0.0 : 2.0 * u(rng);
        const double d = energy_norm(inst.form, Eigen::VectorXd(inst.mu.weights() - w));
        CHECK(r.distance <= d + 1e-12 * scale);
      }
    }
  }

  TEST_CASE("equality on the mask under discrete domination") {
    int checked = 0;
    for (std::uint64_t seed = 200; checked < 20; ++seed) {
      const RandomInstance inst = random_instance(seed);
      if (!discrete_domination(inst.form).holds) continue;
      ++checked;
      const BalayageResult r = sweep(inst.form, inst.mu, inst.mask);
      CHECK(r.domination_passes());
      const Eigen::VectorXd gap = potential(inst.form, r.swept) - potential(inst.form, inst.mu);
      for (Index i : inst.mask.indices()) CHECK(std::abs(gap[i]) <= 1e-10 * r.scale);
      CHECK(gap.maxCoeff() <= 1e-10 * r.scale);
    }
  }

  TEST_CASE("set monotonicity of distances") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
      const RandomInstance inst = random_instance(seed);
      const RegionMask q = inst.mask.unite(RegionMask(inst.space.id(), inst.space.size(), {0}));
      CHECK(sweep(inst.form, inst.mu, q).distance <= sweep(inst.form, inst.mu, inst.mask).distance + 1e-12);
    }
  }

  TEST_CASE("projected gradient agrees with active set") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const RandomInstance inst = random_instance(seed, {20, 80, {2, 3}, {1.0, 2.0}});
      SolveOptions pg;
      pg.method = SolveMethod::projected_gradient;
      const BalayageResult a = sweep(inst.form, inst.mu, inst.mask);
      const BalayageResult b = sweep(inst.form, inst.mu, inst.mask, pg);
      CHECK(b.method == SolveMethod::projected_gradient);
      CHECK(b.max_relative_residual() <= 1e-10);
      const double base = std::max(a.swept.weights().cwiseAbs().maxCoeff(), 1e-14);
      CHECK((a.swept.weights() - b.swept.weights()).cwiseAbs().maxCoeff() <= 1e-7 * base);
    }
  }

  TEST_CASE("non-convergence carries the best iterate") {
    const RandomInstance inst = random_grid_instance(3, 6, MaskShape::ball);
    SolveOptions o;
    o.method = SolveMethod::projected_gradient;
    o.max_iterations = 1;
    o.tolerance = 1e-14;
    try {
      sweep(inst.form, inst.mu, inst.mask, o);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.kind() == ErrorKind::non_convergence);
      CHECK(e.best().swept.size() == inst.space.size());
      CHECK(e.best().max_relative_residual() > 1e-14);
    }
  }

  TEST_CASE("solve option and space validation") {
    const EnergyForm f = two_point();
    SolveOptions bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(sweep(f, measure_of(f, {0, 1}), mask_of(f, {0}), bad), Error);
    const DiscreteMeasure foreign("x", Eigen::Vector2d(0, 1));
    CHECK_THROWS_AS(sweep(f, foreign, mask_of(f, {0})), Error);
  }

  TEST_CASE("zero measure sweeps to zero") {
    const EnergyForm f = triangle();
    const BalayageResult r = sweep(f, measure_of(f, {0, 0, 0}), mask_of(f, {1}));
    CHECK(r.swept.is_zero());
    CHECK(r.max_relative_residual() == 0.0);
  }
}
