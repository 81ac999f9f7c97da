#include "balayage/oracle.hpp"

#include "balayage/parallel.hpp"
#include "cone_solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace balayage {

namespace {

constexpr double kIterativeTolerance = 1e-13;

struct Candidate {
  double objective = std::numeric_limits<double>::infinity();
  std::uint32_t set = 0;
  Eigen::VectorXd z;
};

// Lexicographic order of active sets as sorted index lists.
bool lexicographically_less(std::uint32_t a, std::uint32_t b) {
  while (a != 0 && b != 0) {
    const int la = std::countr_zero(a);
    const int lb = std::countr_zero(b);
    if (la != lb) return la < lb;
    a &= a - 1;
    b &= b - 1;
  }
  return a == 0 && b != 0;
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  return lexicographically_less(a.set, b.set);
}

// Projected Gauss-Seidel: x_i <- max(0, x_i - g_i / K_ii), cyclic.
Eigen::VectorXd coordinate_descent(const Eigen::MatrixXd& k, const Eigen::VectorXd& b, double scale, Index& sweeps) {
  const Index m = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd g = -b;
  constexpr Index kMaxSweeps = 2'000'000;
  for (sweeps = 0; sweeps < kMaxSweeps; ++sweeps) {
    for (Index i = 0; i < m; ++i) {
      const double xi = std::max(0.0, x[i] - g[i] / k(i, i));
      const double delta = xi - x[i];
      if (delta != 0.0) {
        g += delta * k.col(i);
        x[i] = xi;
      }
    }
    if (sweeps % 16 == 0) g = k * x - b;
    double viol = 0.0;
    const double xmax = std::max(x.maxCoeff(), 1.0);
    for (Index i = 0; i < m; ++i) {
      viol = std::max(viol, x[i] > 0.0 ? std::max(std::abs(g[i]), x[i] * std::abs(g[i]) / xmax) : -g[i]);
    }
    if (viol <= kIterativeTolerance * scale) break;
  }
  return x;
}

// Mean of 1/|q - y| over the flat disk of radius a centred at x with unit normal nrm.
double disk_average_newtonian(const double* x, const double* nrm, double a, const double* y) {
  double v[3];
  for (int d = 0; d < 3; ++d) v[d] = y[d] - x[d];
  const double z = v[0] * nrm[0] + v[1] * nrm[1] + v[2] * nrm[2];
  double p[3];
  for (int d = 0; d < 3; ++d) p[d] = v[d] - z * nrm[d];
  // orthonormal tangent basis
  double t1[3];
  const double ax = std::abs(nrm[0]) < 0.9 ? 1.0 : 0.0;
  const double ay = 1.0 - ax;
  t1[0] = ay * nrm[2] - 0.0;
  t1[1] = 0.0 - ax * nrm[2];
  t1[2] = ax * nrm[1] - ay * nrm[0];
  const double t1n = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]);
  for (double& c : t1) c /= t1n;
  const double t2[3] = {nrm[1] * t1[2] - nrm[2] * t1[1], nrm[2] * t1[0] - nrm[0] * t1[2], nrm[0] * t1[1] - nrm[1] * t1[0]};
  const double px = p[0] * t1[0] + p[1] * t1[1] + p[2] * t1[2];
  const double py = p[0] * t2[0] + p[1] * t2[1] + p[2] * t2[2];
  const double p2 = px * px + py * py;
  const double z2 = z * z;

  // polar coordinates around the foot point; the radial integral of t / sqrt(t^2 + z^2) is exact
  constexpr int kAngles = 1024;
  double sum = 0.0;
  for (int k = 0; k < kAngles; ++k) {
    const double theta = 2.0 * std::numbers::pi * (k + 0.5) / kAngles;
    const double pu = px * std::cos(theta) + py * std::sin(theta);
    const double disc = pu * pu - p2 + a * a;
    if (disc <= 0.0) continue;
    const double root = std::sqrt(disc);
    const double hi = -pu + root;
    if (hi <= 0.0) continue;
    const double lo = std::max(0.0, -pu - root);
    sum += std::sqrt(hi * hi + z2) - std::sqrt(lo * lo + z2);
  }
  const double integral = sum * 2.0 * std::numbers::pi / kAngles;
  return integral / (std::numbers::pi * a * a);
}

}  // namespace

OracleReport compare(const Eigen::VectorXd& main, const Eigen::VectorXd& oracle, double main_tolerance, std::string name) {
  if (main.size() != oracle.size()) {
    throw Error(ErrorKind::invalid_argument, "compare: shape mismatch (" + std::to_string(main.size()) + " vs " +
                                                 std::to_string(oracle.size()) + ")");
  }
  OracleReport r;
  r.name = std::move(name);
  r.main_value = main;
  r.oracle_value = oracle;
  const double denom = std::max(oracle.size() ? oracle.cwiseAbs().maxCoeff() : 0.0, kScaleFloor);
  r.discrepancy = main.size() ? (main - oracle).cwiseAbs().maxCoeff() / denom : 0.0;
  r.threshold = 10.0 * main_tolerance;
  r.flagged = r.discrepancy > r.threshold;
  return r;
}

BruteSweepResult brute_sweep(const EnergyForm& form, const DiscreteMeasure& mu, const RegionMask& mask) {
  require_same_space(form.space_id(), mu.space_id(), "measure");
  require_same_space(form.space_id(), mask.space_id(), "mask");
  const Index n = form.size();
  const Eigen::VectorXd kmu = form.gram() * mu.weights();
  const double scale = std::max(kmu.cwiseAbs().maxCoeff(), kScaleFloor);
  BruteSweepResult out;
  Eigen::VectorXd swept = Eigen::VectorXd::Zero(n);
  const auto& idx = mask.indices();
  const auto m = static_cast<Index>(idx.size());

  if (m == 0) {
    out.exact = true;
    out.candidates = 1;
    out.swept = DiscreteMeasure(form.space_id(), std::move(swept));
    return out;
  }
  const Eigen::MatrixXd k = detail::gather(form.gram(), idx, idx);
  Eigen::VectorXd b(m);
  for (Index i = 0; i < m; ++i) b[i] = kmu[idx[static_cast<std::size_t>(i)]];

  if (n <= kBruteMaxPoints && m <= kBruteMaxMask) {
    const std::uint32_t total = std::uint32_t{1} << m;
    // fixed blocks so the reduction order does not depend on the worker count
    constexpr std::uint32_t kBlock = 4096;
    const long blocks = static_cast<long>((total + kBlock - 1) / kBlock);
    std::vector<Candidate> best(static_cast<std::size_t>(blocks));
    parallel_for(0, blocks, [&](long blk) {
      Candidate& local = best[static_cast<std::size_t>(blk)];
      const std::uint32_t begin = static_cast<std::uint32_t>(blk) * kBlock;
      const std::uint32_t end = std::min(total, begin + kBlock);
      std::vector<Index> sel;
      for (std::uint32_t set = begin; set < end; ++set) {
        sel.clear();
        for (Index i = 0; i < m; ++i) {
          if (set & (std::uint32_t{1} << i)) sel.push_back(i);
        }
        Candidate c;
        c.set = set;
        if (sel.empty()) {
          c.objective = 0.0;
        } else {
          const Eigen::MatrixXd ks = detail::gather(k, sel, sel);
          Eigen::VectorXd bs(static_cast<Index>(sel.size()));
          for (std::size_t a = 0; a < sel.size(); ++a) bs[static_cast<Index>(a)] = b[sel[a]];
          Eigen::LLT<Eigen::MatrixXd> llt(ks);
          if (llt.info() != Eigen::Success) continue;
          Eigen::VectorXd z = llt.solve(bs);
          z += llt.solve(Eigen::VectorXd(bs - ks * z));
          if (z.minCoeff() < 0.0) continue;
          c.objective = -0.5 * bs.dot(z);
          c.z = std::move(z);
        }
        if (better(c, local)) local = std::move(c);
      }
    });
    Candidate winner;
    for (auto& c : best) {
      if (better(c, winner)) winner = std::move(c);
    }
    Index a = 0;
    for (Index i = 0; i < m; ++i) {
      if (winner.set & (std::uint32_t{1} << i)) swept[idx[static_cast<std::size_t>(i)]] = winner.z[a++];
    }
    out.exact = true;
    out.candidates = total;
    out.objective = winner.objective;
  } else {
    Index sweeps = 0;
    const Eigen::VectorXd x = coordinate_descent(k, b, scale, sweeps);
    for (Index i = 0; i < m; ++i) swept[idx[static_cast<std::size_t>(i)]] = x[i];
    out.exact = false;
    out.candidates = sweeps;
    out.objective = 0.5 * x.dot(k * x) - b.dot(x);
    std::ostringstream os;
    os << "exact enumeration needs N <= " << kBruteMaxPoints << " and |A| <= " << kBruteMaxMask << " (got N = " << n
       << ", |A| = " << m << "); used projected coordinate descent to relative tolerance " << kIterativeTolerance;
    out.warning = os.str();
  }
  out.swept = DiscreteMeasure(form.space_id(), std::move(swept));
  return out;
}

SphereMassReport newtonian_sphere_mass(double radius, double source_distance, int count, const SolveOptions& opts) {
  if (!(source_distance > radius)) {
    throw Error(ErrorKind::domain, "sphere mass law needs the source strictly outside the sphere (|y| > r)");
  }
  const std::vector<double> center{0.0, 0.0, 0.0};
  const DiscreteSpace sphere = build_sphere(center, radius, count);
  const KernelSpec spec = KernelSpec::newtonian(3);
  const EnergyForm form = assemble(spec, sphere);

  // Potential of the unit source at each sphere point. A cell within one cell radius of
  // the source uses the mean over its equal-area tangent disk, which is what the Gram
  // diagonal assigns to a source sitting at the cell centre; every other cell uses the
  // point value, as the off-diagonal Gram entries do.
  const double y[3] = {0.0, 0.0, source_distance};
  const double cell_radius = std::sqrt(sphere.cell_weight(0) / std::numbers::pi);
  const Index n = sphere.size();
  Eigen::VectorXd target(n);
  for (Index i = 0; i < n; ++i) {
    const double x[3] = {sphere.coord(i, 0), sphere.coord(i, 1), sphere.coord(i, 2)};
    const double d = std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + (x[2] - y[2]) * (x[2] - y[2]));
    if (d > cell_radius) {
      target[i] = 1.0 / d;
    } else {
      const double nrm[3] = {x[0] / radius, x[1] / radius, x[2] / radius};
      target[i] = disk_average_newtonian(x, nrm, cell_radius, y);
    }
  }

  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  const double scale = std::max(target.cwiseAbs().maxCoeff(), kScaleFloor);
  detail::ConeProblem problem{form.gram(), all, target, scale};
  const auto sol = opts.method == SolveMethod::active_set
                       ? detail::solve_active_set(problem, opts.tolerance, opts.iteration_cap(n), {}, form.factor())
                       : detail::solve_projected_gradient(problem, opts.tolerance, opts.iteration_cap(n));

  SphereMassReport out;
  out.count = count;
  out.mass = sol.x.sum();
  out.classical = radius / source_distance;
  out.relative_error = std::abs(out.mass - out.classical) / out.classical;
  out.max_relative_residual = detail::kkt_violation(problem, sol.x);
  out.active_set_size = static_cast<Index>(sol.passive.size());
  if (!sol.converged) {
    throw Error(ErrorKind::non_convergence, "sphere sweep did not converge (count " + std::to_string(count) + ")");
  }
  out.report = compare(Eigen::VectorXd::Constant(1, out.mass), Eigen::VectorXd::Constant(1, out.classical),
                       opts.tolerance, "newtonian_sphere_mass");
  out.report.oracle_iterations = sol.iterations;
  std::ostringstream os;
  os << "count " << count << ", r " << radius << ", |y| " << source_distance << ": swept mass " << out.mass
     << " vs r/|y| = " << out.classical;
  out.report.notes = os.str();
  return out;
}

std::vector<SphereMassReport> sphere_mass_refinement(double radius, double source_distance,
                                                     const std::vector<int>& counts, const SolveOptions& opts) {
  std::vector<SphereMassReport> out;
  out.reserve(counts.size());
  for (int c : counts) out.push_back(newtonian_sphere_mass(radius, source_distance, c, opts));
  return out;
}

RefinementEstimate estimate_limit(double m1, double m2, double m3) {
  RefinementEstimate e;
  const double d1 = m2 - m1;
  const double d2 = m3 - m2;
  if (d1 == 0.0) {
    e.convergent = d2 == 0.0;
    e.ratio = 0.0;
    e.limit = m3;
    return e;
  }
  e.ratio = std::abs(d2 / d1);
  e.convergent = e.ratio < 1.0;
  // geometric tail d2 * (q + q^2 + ...) with q = d2 / d1
  const double q = d2 / d1;
  e.limit = e.convergent ? m3 + d2 * q / (1.0 - q) : m3;
  return e;
}

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick_int = [&](Index lo, Index hi) { return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  for (int attempt = 0;; ++attempt) {
    const int dim = options.dims[static_cast<std::size_t>(rng() % options.dims.size())];
    std::vector<double> alphas;
    for (double a : options.alphas) {
      if (a < dim) alphas.push_back(a);
    }
    const double alpha = alphas[static_cast<std::size_t>(rng() % alphas.size())];
    const Index n = pick_int(options.min_points, options.max_points);

    // hard-core sampling keeps the regularized diagonal dominant over close pairs
    const double min_sep = 0.7 * std::pow(static_cast<double>(n), -1.0 / dim);
    std::vector<double> pts;
    Index placed = 0;
    for (int tries = 0; placed < n && tries < 100000; ++tries) {
      std::vector<double> p(static_cast<std::size_t>(dim));
      for (double& c : p) c = unit(rng);
      bool ok = true;
      for (Index j = 0; j < placed && ok; ++j) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double d = p[static_cast<std::size_t>(a)] - pts[static_cast<std::size_t>(j * dim + a)];
          s += d * d;
        }
        ok = s >= min_sep * min_sep;
      }
      if (!ok) continue;
      pts.insert(pts.end(), p.begin(), p.end());
      ++placed;
    }
    if (placed < n) continue;

    DiscreteSpace space(dim, std::move(pts), std::vector<double>(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n)));
    const KernelSpec spec = KernelSpec::riesz(alpha, dim);
    try {
      EnergyForm form = assemble(spec, space);
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (Index i = 0; i < n; ++i) {
        if (unit(rng) < 0.5) w[i] = 0.5 + unit(rng);
      }
      if (w.sum() == 0.0) w[pick_int(0, n - 1)] = 1.0;
      std::vector<Index> mask;
      for (Index i = 0; i < n; ++i) {
        if (unit(rng) < 0.5) mask.push_back(i);
      }
      if (mask.empty()) mask.push_back(pick_int(0, n - 1));
      DiscreteMeasure mu(space.id(), std::move(w));
      RegionMask region(space.id(), n, std::move(mask));
      return RandomInstance{seed, std::move(space), spec, std::move(form), std::move(mu), std::move(region)};
    } catch (const EnergyPrincipleError&) {
      if (attempt > 1000) throw;
    }
  }
}

RandomInstance random_grid_instance(std::uint64_t seed, int resolution, MaskShape shape) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DiscreteSpace space = build_grid(Box{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, resolution);
  const KernelSpec spec = KernelSpec::newtonian(3);
  EnergyForm form = assemble(spec, space);
  const Index n = space.size();

  std::vector<Index> mask;
  switch (shape) {
    case MaskShape::random_subset:
      for (Index i = 0; i < n; ++i) {
        if (unit(rng) < 0.5) mask.push_back(i);
      }
      break;
    case MaskShape::ball: {
      const std::vector<double> c{0.2 + 0.6 * unit(rng), 0.2 + 0.6 * unit(rng), 0.2 + 0.6 * unit(rng)};
      const double r = 0.2 + 0.25 * unit(rng);
      mask = mask_ball(space, c, r).indices();
      break;
    }
    case MaskShape::box: {
      std::vector<double> lo(3), hi(3);
      for (int a = 0; a < 3; ++a) {
        const double u = unit(rng), v = unit(rng);
        lo[static_cast<std::size_t>(a)] = 0.6 * std::min(u, v);
        hi[static_cast<std::size_t>(a)] = 0.4 + 0.6 * std::max(u, v);
      }
      mask = mask_from_predicate(space, [&](std::span<const double> p) {
               for (int a = 0; a < 3; ++a) {
                 if (p[static_cast<std::size_t>(a)] < lo[static_cast<std::size_t>(a)] ||
                     p[static_cast<std::size_t>(a)] > hi[static_cast<std::size_t>(a)]) {
                   return false;
                 }
               }
               return true;
             }).indices();
      break;
    }
  }
  if (mask.empty()) mask.push_back(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (unit(rng) < 0.125) w[i] = 0.5 + unit(rng);
  }
  if (w.sum() == 0.0) w[0] = 1.0;
  DiscreteMeasure mu(space.id(), std::move(w));
  RegionMask region(space.id(), n, std::move(mask));
  return RandomInstance{seed, std::move(space), spec, std::move(form), std::move(mu), std::move(region)};
}

}  // namespace balayage
