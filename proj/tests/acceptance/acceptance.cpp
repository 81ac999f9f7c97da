// Acceptance suite: one PASS/FAIL line per criterion.
//
//   balayage_acceptance [--expect-fail=5,...] [--only=1,3]
//
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <balayage/balayage.hpp>
#include <balayage/capacity.hpp>
#include <balayage/convergence.hpp>
#include <balayage/oracle.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace balayage;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return max_abs(a - b) / std::max(max_abs(b), kScaleFloor);
}

RegionMask mask_of(const EnergyForm& f, std::vector<Index> idx) { return RegionMask(f.space_id(), f.size(), std::move(idx)); }

DiscreteMeasure measure_of(const EnergyForm& f, std::vector<double> w) {
  return DiscreteMeasure(f.space_id(), Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Index>(w.size())));
}

const RandomInstanceOptions kMedium{2, 200, {2, 3}, {1.0, 1.5, 2.0}};
const RandomInstanceOptions kSmall{2, 12, {2, 3}, {1.0, 1.5, 2.0}};

// ---------------------------------------------------------------------------

Outcome kkt_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int bad = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const RandomInstance inst = random_instance(10'000 + s, kMedium);
    const BalayageResult r = sweep(inst.form, inst.mu, inst.mask);
    const double res = r.max_relative_residual();
    worst = std::max(worst, res);
    if (res > 1e-10) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0,
          fmt("500 instances N<=200, worst relative KKT residual %.2e, %d over 1e-10, %.2f s", worst, bad, secs)};
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  int inexact = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const RandomInstance inst = random_instance(20'000 + s, kSmall);
    const BalayageResult r = sweep(inst.form, inst.mu, inst.mask);
    const BruteSweepResult b = brute_sweep(inst.form, inst.mu, inst.mask);
    if (!b.exact) ++inexact;
    worst = std::max(worst, max_abs(r.swept.weights() - b.swept.weights()));
  }
  return {worst <= 1e-9 && inexact == 0,
          fmt("500 instances N<=12, worst max-norm discrepancy %.2e, exact enumeration on %d", worst, 500 - inexact)};
}

Outcome hand_fixtures() {
  double err = 0.0;
  auto track = [&](double got, double want) { err = std::max(err, std::abs(got - want)); };

  Eigen::Matrix2d g2;
  g2 << 2, 1, 1, 2;
  const EnergyForm two = EnergyForm::from_gram("two", KernelSpec::newtonian(3), g2, DiagRule::fixed(2));
  const BalayageResult a = sweep(two, measure_of(two, {0, 1}), mask_of(two, {0}));
  track(a.swept.weights()[0], 0.5);
  track(a.swept.weights()[1], 0.0);
  track(a.distance * a.distance, 1.5);  // 2 - 2 * 0.5 * 1 + 0.25 * 2

  Eigen::Matrix3d g3;
  g3 << 2, 1.9, 1, 1.9, 2, 0.5, 1, 0.5, 2;
  const EnergyForm clip = EnergyForm::from_gram("clip", KernelSpec::newtonian(3), g3, DiagRule::fixed(2));
  const BalayageResult c = sweep(clip, measure_of(clip, {0, 0, 1}), mask_of(clip, {0, 1}));
  track(c.swept.weights()[0], 0.5);
  track(c.swept.weights()[1], 0.0);
  track(c.swept.weights()[2], 0.0);
  track(c.distance * c.distance, 1.5);

  Eigen::Matrix3d gt;
  gt << 1, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 1;
  const EnergyForm tri = EnergyForm::from_gram("tri", KernelSpec::newtonian(3), gt, DiagRule::fixed(1));
  const DiscreteMeasure mu = measure_of(tri, {0, 0, 1});
  const ExhaustionReport ex = exhaust(tri, mu, {mask_of(tri, {0}), mask_of(tri, {0, 1})});
  track(ex.stages[0].distance * ex.stages[0].distance, 0.75);
  track(ex.stages[1].distance * ex.stages[1].distance, 2.0 / 3.0);
  const ContractionCheck cc = contraction_check(tri, mu, mask_of(tri, {0}), mask_of(tri, {0, 1}));
  track(cc.lhs, 1.0 / 12.0);
  track(cc.rhs, 1.0 / 12.0);
  return {err <= 1e-12 && cc.holds, fmt("2-point, clipping and exhaustion fixtures, worst error %.2e", err)};
}

Outcome projection_laws() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double idem = 0.0, homog = 0.0, expand = 0.0, minimal = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const RandomInstance inst = random_instance(30'000 + s, RandomInstanceOptions{2, 60, {2, 3}, {1.0, 1.5, 2.0}});
    const EnergyForm& f = inst.form;
    const BalayageResult r = sweep(f, inst.mu, inst.mask);
    const double base = std::max(max_abs(r.swept.weights()), kScaleFloor);
    idem = std::max(idem, max_abs(sweep(f, r.swept, inst.mask).swept.weights() - r.swept.weights()) / base);

    const double a = 0.25 + 4.0 * u(rng);
    const BalayageResult ra = sweep(f, DiscreteMeasure(f.space_id(), a * inst.mu.weights()), inst.mask);
    homog = std::max(homog, max_abs(ra.swept.weights() - a * r.swept.weights()) / (a * base));

    Eigen::VectorXd wn = Eigen::VectorXd::Zero(f.size());
    for (Index i = 0; i < f.size(); ++i) {
      if (u(rng) < 0.5) wn[i] = 2.0 * u(rng);
    }
    const DiscreteMeasure nu(f.space_id(), wn);
    const BalayageResult rn = sweep(f, nu, inst.mask);
    const double lhs = energy_norm(f, Eigen::VectorXd(r.swept.weights() - rn.swept.weights()));
    const double rhs = energy_norm(f, Eigen::VectorXd(inst.mu.weights() - wn));
    expand = std::max(expand, (lhs - rhs) / std::max(rhs, kScaleFloor));

    const double norm_mu = std::max(energy_norm(f, inst.mu), kScaleFloor);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(f.size());
      for (Index i : inst.mask.indices()) w[i] = u(rng) < 0.3 ? 0.0 : 2.0 * u(rng) * base;
      const double d = energy_norm(f, Eigen::VectorXd(inst.mu.weights() - w));
      minimal = std::max(minimal, (r.distance - d) / norm_mu);
    }
  }
  const bool pass = idem <= 1e-10 && homog <= 1e-10 && expand <= 1e-10 && minimal <= 1e-12;
  return {pass, fmt("100 instances: idempotence %.1e, homogeneity %.1e, expansion excess %.1e, minimality excess %.1e",
                    idem, homog, std::max(expand, 0.0), std::max(minimal, 0.0))};
}

struct SymmetryStats {
  int instances = 0;
  int excluded = 0;
  int over = 0;
  double worst = 0.0;
};

SymmetryStats symmetry_study(const std::function<EnergyForm(const RandomInstance&)>& form_of) {
  const MaskShape shapes[] = {MaskShape::ball, MaskShape::box, MaskShape::random_subset};
  SymmetryStats st;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const RandomInstance inst = random_grid_instance(40'000 + s, 8, shapes[s % 3]);
    const EnergyForm form = form_of(inst);
    const RandomInstance other = random_grid_instance(50'000 + s, 8, MaskShape::ball);
    const DiscreteMeasure mu(form.space_id(), inst.mu.weights());
    const DiscreteMeasure nu(form.space_id(), other.mu.weights());
    const RegionMask mask(form.space_id(), form.size(), inst.mask.indices());
    const BalayageResult rm = sweep(form, mu, mask);
    const BalayageResult rn = sweep(form, nu, mask);
    ++st.instances;
    if (!rm.domination_passes() || !rn.domination_passes()) {
      ++st.excluded;
      continue;
    }
    const double lhs = inner_product(form, rm.swept, nu);
    const double rhs = inner_product(form, mu, rn.swept);
    const double res = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
    st.worst = std::max(st.worst, res);
    if (res > 1e-6) ++st.over;
  }
  return st;
}

Outcome symmetry() {
  const SymmetryStats d = symmetry_study([](const RandomInstance& inst) { return inst.form; });
  const double frac = static_cast<double>(d.excluded) / d.instances;
  const bool pass = frac < 0.05 && d.over == 0;
  std::string detail = fmt("8^3 Newtonian grid, default diagonal: %d/%d fail domination (%.0f%%, limit 5%%)",
                           d.excluded, d.instances, 100.0 * frac);
  detail += d.excluded == d.instances
                ? std::string(", no instance left to check")
                : fmt(", %d of the rest over 1e-6, worst %.1e", d.over, d.worst);

  // Informational: the same instances with a diagonal of 6/h, where the Gram inverse is an M-matrix.
  const SymmetryStats m = symmetry_study([](const RandomInstance& inst) {
    return assemble(inst.spec, inst.space, DiagRule::fixed(6.0 * 8.0));
  });
  detail += fmt(" | diagonal 6/h: %d/%d excluded, %d over 1e-6, worst %.1e", m.excluded, m.instances, m.over, m.worst);
  return {pass, detail};
}

struct ExhaustionStats {
  int dist_bad = 0;
  int contraction_bad = 0;
  int final_bad = 0;
  int mono_bad = 0;      // on domination-passing instances
  int mono_bad_all = 0;  // on every instance
  int dom_pass = 0;
};

ExhaustionStats exhaustion_study(const std::function<EnergyForm(const RandomInstance&)>& form_of) {
  ExhaustionStats st;
  const MaskShape shapes[] = {MaskShape::ball, MaskShape::box, MaskShape::random_subset};
  for (std::uint64_t s = 0; s < 50; ++s) {
    const RandomInstance inst = random_grid_instance(60'000 + s, 8, shapes[s % 3]);
    const EnergyForm form = form_of(inst);
    const DiscreteMeasure mu(form.space_id(), inst.mu.weights());
    const RegionMask target(form.space_id(), form.size(), inst.mask.indices());
    std::vector<RegionMask> masks;
    for (const RegionMask& m : default_exhaustion(inst.space, inst.mask, 5)) {
      masks.emplace_back(form.space_id(), form.size(), m.indices());
    }
    const ExhaustionReport rep = exhaust(form, mu, masks);
    const double norm_mu = energy_norm(form, mu);
    bool passes = true;
    bool mono = true;
    for (std::size_t j = 0; j < rep.stages.size(); ++j) {
      const auto& stage = rep.stages[j];
      passes = passes && stage.domination_passes;
      if (j == 0) continue;
      const auto& prev = rep.stages[j - 1];
      if (stage.distance > prev.distance + 1e-12 * norm_mu) ++st.dist_bad;
      if (!contraction_check(form, mu, prev.mask, stage.mask).holds) ++st.contraction_bad;
      if ((prev.potential - stage.potential).maxCoeff() > 1e-8 * rep.scale) mono = false;
    }
    if (rep.final_discrepancy > 2e-10 * rep.scale) ++st.final_bad;
    if (!mono) ++st.mono_bad_all;
    if (passes) {
      ++st.dom_pass;
      if (!mono) ++st.mono_bad;
    }
  }
  return st;
}

Outcome exhaustion() {
  const ExhaustionStats d = exhaustion_study([](const RandomInstance& inst) { return inst.form; });
  const bool pass = d.dist_bad == 0 && d.contraction_bad == 0 && d.final_bad == 0 && d.mono_bad == 0;
  std::string detail = fmt("50 grid exhaustions: distance increases %d, contraction failures %d, final mismatches %d, "
                           "monotonicity failures %d on %d domination-passing instances (%d of 50 overall)",
                           d.dist_bad, d.contraction_bad, d.final_bad, d.mono_bad, d.dom_pass, d.mono_bad_all);
  const ExhaustionStats m = exhaustion_study([](const RandomInstance& inst) {
    return assemble(inst.spec, inst.space, DiagRule::fixed(6.0 * 8.0));
  });
  detail += fmt(" | diagonal 6/h: %d domination-passing, monotonicity failures %d, contraction failures %d",
                m.dom_pass, m.mono_bad_all, m.contraction_bad);
  return {pass, detail};
}

Outcome set_invariance() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const RandomInstance inst = random_instance(70'000 + s, RandomInstanceOptions{2, 80, {2, 3}, {1.0, 1.5, 2.0}});
    const BalayageResult r = sweep(inst.form, inst.mu, inst.mask);
    const RegionMask support = mask_of(inst.form, r.active_set);
    worst = std::max(worst, rel_diff(sweep(inst.form, inst.mu, support).swept.weights(), r.swept.weights()));
    for (int k = 0; k < 3; ++k) {
      std::vector<Index> q = r.active_set;
      for (Index i : inst.mask.indices()) {
        if (rng() % 2 == 0) q.push_back(i);
      }
      const RegionMask mid = mask_of(inst.form, q);
      worst = std::max(worst, rel_diff(sweep(inst.form, inst.mu, mid).swept.weights(), r.swept.weights()));
    }
  }
  return {worst <= 1e-10, fmt("100 instances, A vs supp and intermediate masks, worst difference %.1e", worst)};
}

Outcome certification() {
  std::mt19937_64 rng(8);
  int accepted = 0, rejected = 0, trials = 0, skipped = 0, bit_identical = 0;
  std::uint64_t seed = 80'000;
  while (trials < 100) {
    const RandomInstance inst = random_instance(seed++, kSmall);
    if (!discrete_domination(inst.form).holds) {
      ++skipped;
      continue;
    }
    ++trials;
    const TestFamily family = build_default_family(inst.form);
    const BalayageResult r = sweep(inst.form, inst.mu, inst.mask);
    if (certify(inst.form, r.swept, inst.mu, inst.mask, family).certified) ++accepted;
    Eigen::VectorXd w = r.swept.weights();
    w[static_cast<Index>(rng() % static_cast<std::uint64_t>(w.size()))] += 1e-4;
    if (!certify(inst.form, DiscreteMeasure(inst.form.space_id(), w), inst.mu, inst.mask, family).certified) ++rejected;
    if (outer_sweep(inst.form, inst.mu, inst.mask).swept.weights() == r.swept.weights()) ++bit_identical;
  }
  return {accepted == 100 && rejected == 100 && bit_identical == 100,
          fmt("accepted %d/100, rejected perturbations %d/100, outer bit-identical %d/100 "
              "(%d drawn forms without discrete domination skipped)",
              accepted, rejected, bit_identical, skipped)};
}

Outcome capacity_suite() {
  Eigen::Matrix2d g2;
  g2 << 2, 1, 1, 2;
  const EnergyForm two = EnergyForm::from_gram("two", KernelSpec::newtonian(3), g2, DiagRule::fixed(2));
  const double cap2 = capacity(two, mask_of(two, {0, 1}));
  const double cap_err = std::abs(cap2 - 2.0 / 3.0);

  std::mt19937_64 rng(9);
  double spread = 0.0;
  int mono_bad = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const RandomInstance inst = random_instance(90'000 + s, RandomInstanceOptions{2, 60, {2, 3}, {1.0, 1.5, 2.0}});
    const CapacityResult r = equilibrium(inst.form, inst.mask);
    spread = std::max(spread, r.potential_spread);
    if (s < 50) {
      std::vector<Index> sub;
      for (Index i : inst.mask.indices()) {
        if (rng() % 2 == 0) sub.push_back(i);
      }
      if (capacity(inst.form, mask_of(inst.form, sub)) > r.capacity + 1e-12) ++mono_bad;
    }
  }
  return {cap_err <= 1e-12 && spread <= 1e-8 && mono_bad == 0,
          fmt("2-point capacity error %.1e, worst equilibrium spread %.1e on 100 masks, %d monotonicity failures on 50",
              cap_err, spread, mono_bad)};
}

Outcome sphere_mass() {
  const auto t0 = std::chrono::steady_clock::now();
  const SphereMassReport main = newtonian_sphere_mass(1.0, 2.0, 2000);
  const double main_secs = seconds_since(t0);
  const auto refinement = sphere_mass_refinement(1.0, 2.0, {500, 2000, 8000});
  const RefinementEstimate est = estimate_limit(refinement[0].mass, refinement[1].mass, refinement[2].mass);
  const bool limit_ok = est.convergent && std::abs(est.limit - 0.5) <= 0.005;
  const bool mass_ok = std::abs(main.mass - 0.5) <= 0.02 * 0.5;
  return {limit_ok && mass_ok && main_secs < 60.0,
          fmt("masses %.6f, %.6f, %.6f at 500/2000/8000, ratio %.3f, limit %.5f; count 2000 error %.2f%% in %.2f s",
              refinement[0].mass, refinement[1].mass, refinement[2].mass, est.ratio, est.limit,
              100.0 * std::abs(main.mass - 0.5) / 0.5, main_secs)};
}

Outcome vague_convergence() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int conv_pass = 0, div_fail = 0, agree = 0;
  const double tol = 1e-8;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const RandomInstance inst = random_instance(100'000 + s, RandomInstanceOptions{2, 30, {2, 3}, {1.0, 1.5, 2.0}});
    const EnergyForm& f = inst.form;
    const TestFamily family = build_default_family(f);
    const Index n = f.size();
    Eigen::VectorXd base(n), drift(n), offset = Eigen::VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i) {
      base[i] = u(rng);
      drift[i] = u(rng);
    }
    offset[static_cast<Index>(rng() % static_cast<std::uint64_t>(n))] = 1e-3 + u(rng);
    const DiscreteMeasure limit(f.space_id(), base);
    std::vector<DiscreteMeasure> good, bad;
    for (int k = 1; k <= 40; ++k) {
      const Eigen::VectorXd step = std::ldexp(1.0, -k) * drift;
      good.emplace_back(f.space_id(), base + step);
      bad.emplace_back(f.space_id(), base + step + offset);
    }
    const VagueConvergenceReport g = vague_convergence_check(f, family, good, limit, tol);
    const VagueConvergenceReport b = vague_convergence_check(f, family, bad, limit, tol);
    if (g.pass) ++conv_pass;
    if (!b.pass) ++div_fail;
    if (g.views_agree && b.views_agree && g.pass == g.direct_pass && b.pass == b.direct_pass) ++agree;
  }
  return {conv_pass == 100 && div_fail == 100 && agree == 100,
          fmt("convergent sequences pass %d/100, non-convergent fail %d/100, views agree %d/100", conv_pass, div_fail,
              agree)};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_fail, only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--expect-fail=", 0) == 0) {
      expected_fail = parse_list(a.substr(14));
    } else if (a.rfind("--only=", 0) == 0) {
      only = parse_list(a.substr(7));
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail=N,...] [--only=N,...]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"KKT certificate suite", kkt_suite},
      {"oracle equivalence", oracle_equivalence},
      {"hand-solved fixtures", hand_fixtures},
      {"projection laws", projection_laws},
      {"symmetry relation", symmetry},
      {"exhaustion convergence", exhaustion},
      {"set invariance", set_invariance},
      {"certification and outer balayage", certification},
      {"capacity", capacity_suite},
      {"Newtonian sphere mass law", sphere_mass},
      {"vague-convergence checker", vague_convergence},
  };

  std::set<int> failed;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    const char* note = !o.pass && expected_fail.count(id) ? " (known failure)" : "";
    std::printf("[%s] %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str(), note);
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expected_fail) {
    if (only.empty() || only.count(id)) expected.insert(id);
  }
  std::printf("%zu passed, %zu failed\n", (only.empty() ? criteria.size() : only.size()) - failed.size(), failed.size());
  if (failed != expected) {
    for (int id : expected) {
      if (!failed.count(id)) std::printf("criterion %d was expected to fail but passed; update the expected list\n", id);
    }
    return 1;
  }
  return 0;
}
