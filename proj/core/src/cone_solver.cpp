#include "cone_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace balayage::detail {

namespace {

constexpr double kPivotFloor = 1e-14;

// Gradient K_AA x - b, touching only the columns of the passive indices.
Eigen::VectorXd gradient(const ConeProblem& pb, const Eigen::VectorXd& x, const std::vector<Index>& passive) {
  Eigen::VectorXd g = -pb.target;
  const auto m = static_cast<Index>(pb.mask.size());
  for (Index p : passive) {
    const double xp = x[p];
    if (xp == 0.0) continue;
    const auto col = pb.gram.col(pb.mask[static_cast<std::size_t>(p)]);
    for (Index i = 0; i < m; ++i) g[i] += col[pb.mask[static_cast<std::size_t>(i)]] * xp;
  }
  return g;
}

std::vector<Index> global_of(const ConeProblem& pb, const std::vector<Index>& local) {
  std::vector<Index> out(local.size());
  for (std::size_t k = 0; k < local.size(); ++k) out[k] = pb.mask[static_cast<std::size_t>(local[k])];
  return out;
}

}  // namespace

Eigen::MatrixXd gather(const Eigen::MatrixXd& gram, std::span<const Index> rows, std::span<const Index> cols) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto col = gram.col(cols[j]);
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i), static_cast<Index>(j)) = col[rows[i]];
  }
  return out;
}

UpdatableCholesky::UpdatableCholesky(Index capacity) : l_(capacity, capacity) {}

bool UpdatableCholesky::reset(const Eigen::MatrixXd& block) {
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success) {
    k_ = 0;
    return false;
  }
  reset_from_factor(llt.matrixL());
  return true;
}

void UpdatableCholesky::reset_from_factor(const Eigen::MatrixXd& lower) {
  k_ = lower.rows();
  l_.topLeftCorner(k_, k_) = lower;
}

bool UpdatableCholesky::append(const Eigen::VectorXd& cross, double diag) {
  Eigen::VectorXd y = cross;
  if (k_ > 0) l_.topLeftCorner(k_, k_).triangularView<Eigen::Lower>().solveInPlace(y);
  const double d2 = diag - y.squaredNorm();
  if (!(d2 > kPivotFloor * diag)) return false;
  if (k_ > 0) l_.row(k_).head(k_) = y.transpose();
  l_(k_, k_) = std::sqrt(d2);
  ++k_;
  return true;
}

void UpdatableCholesky::remove(Index pos) {
  // drop the row, leaving one superdiagonal entry per trailing row
  for (Index c = 0; c < k_; ++c) {
    for (Index r = std::max(pos, c - 1); r + 1 < k_; ++r) l_(r, c) = l_(r + 1, c);
  }
  // Givens rotations on column pairs restore the lower-triangular shape
  for (Index c = pos; c + 1 < k_; ++c) {
    const double a = l_(c, c);
    const double b = l_(c, c + 1);
    const double r = std::hypot(a, b);
    const double cs = a / r;
    const double sn = b / r;
    for (Index row = c; row + 1 < k_; ++row) {
      const double u = l_(row, c);
      const double v = l_(row, c + 1);
      l_(row, c) = cs * u + sn * v;
      l_(row, c + 1) = -sn * u + cs * v;
    }
  }
  --k_;
}

Eigen::VectorXd UpdatableCholesky::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd z = rhs;
  if (k_ == 0) return z;
  const auto lower = l_.topLeftCorner(k_, k_).triangularView<Eigen::Lower>();
  lower.solveInPlace(z);
  lower.adjoint().solveInPlace(z);
  return z;
}

double kkt_violation(const ConeProblem& pb, const Eigen::VectorXd& x) {
  std::vector<Index> support;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) support.push_back(i);
  }
  const Eigen::VectorXd g = gradient(pb, x, support);
  double stat = 0.0;
  double feas = 0.0;
  double comp = 0.0;
  const double xmax = std::max(x.size() ? x.cwiseAbs().maxCoeff() : 0.0, 1e-300);
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) return std::numeric_limits<double>::infinity();
    if (x[i] > 0.0) {
      stat = std::max(stat, std::abs(g[i]));
      comp = std::max(comp, x[i] * std::abs(g[i]) / xmax);
    }
    feas = std::max(feas, -g[i]);
  }
  return std::max({stat, feas, comp}) / pb.scale;
}

ConeSolution solve_active_set(const ConeProblem& pb, double tolerance, Index max_iterations,
                              const std::vector<Index>& warm_start, const Eigen::LLT<Eigen::MatrixXd>* full_factor) {
  const auto m = static_cast<Index>(pb.mask.size());
  ConeSolution sol;
  sol.x = Eigen::VectorXd::Zero(m);
  if (m == 0) {
    sol.converged = true;
    return sol;
  }
  const double threshold = tolerance * pb.scale;
  const Eigen::MatrixXd& gram = pb.gram;
  auto global = [&](Index local) { return pb.mask[static_cast<std::size_t>(local)]; };

  UpdatableCholesky chol(m);
  std::vector<Index> passive;  // factor order
  std::vector<Index> position(static_cast<std::size_t>(m), -1);
  Eigen::VectorXd& x = sol.x;
  Index iterations = 0;

  auto reindex = [&] {
    std::fill(position.begin(), position.end(), -1);
    for (std::size_t k = 0; k < passive.size(); ++k) position[static_cast<std::size_t>(passive[k])] = static_cast<Index>(k);
  };

  // solve K_PP z = b_P with one step of iterative refinement
  auto solve_passive = [&] {
    const auto k = static_cast<Index>(passive.size());
    Eigen::VectorXd rhs(k);
    for (Index a = 0; a < k; ++a) rhs[a] = pb.target[passive[static_cast<std::size_t>(a)]];
    Eigen::VectorXd z = chol.solve(rhs);
    Eigen::VectorXd residual = rhs;
    for (Index b = 0; b < k; ++b) {
      const auto col = gram.col(global(passive[static_cast<std::size_t>(b)]));
      const double zb = z[b];
      for (Index a = 0; a < k; ++a) residual[a] -= col[global(passive[static_cast<std::size_t>(a)])] * zb;
    }
    z += chol.solve(residual);
    return z;
  };

  auto drop_positions = [&](const std::vector<Index>& drop) {
    // drop holds factor positions in increasing order
    if (drop.empty()) return;
    if (4 * drop.size() > passive.size()) {
      std::vector<Index> kept;
      std::size_t d = 0;
      for (std::size_t k = 0; k < passive.size(); ++k) {
        if (d < drop.size() && static_cast<Index>(k) == drop[d]) {
          ++d;
        } else {
          kept.push_back(passive[k]);
        }
      }
      passive = std::move(kept);
      const auto g = global_of(pb, passive);
      if (!passive.empty() && !chol.reset(gather(gram, g, g))) passive.clear();
      if (passive.empty()) chol.clear();
    } else {
      for (auto it = drop.rbegin(); it != drop.rend(); ++it) {
        chol.remove(*it);
        passive.erase(passive.begin() + *it);
      }
    }
    reindex();
  };

  // Optimistic start: solve on the warm-start set and discard negative components
  // until the restricted solution is strictly positive.
  std::vector<Index> start;
  if (warm_start.empty()) {
    start.resize(static_cast<std::size_t>(m));
    std::iota(start.begin(), start.end(), Index{0});
  } else {
    for (Index i : warm_start) {
      if (i >= 0 && i < m) start.push_back(i);
    }
    std::sort(start.begin(), start.end());
    start.erase(std::unique(start.begin(), start.end()), start.end());
  }
  while (!start.empty()) {
    ++iterations;
    passive = start;
    const bool whole_space = full_factor != nullptr && m == gram.rows() && static_cast<Index>(start.size()) == m;
    bool ok = true;
    if (whole_space) {
      chol.reset_from_factor(full_factor->matrixL());
    } else {
      const auto g = global_of(pb, passive);
      ok = chol.reset(gather(gram, g, g));
    }
    if (!ok) {
      passive.clear();
      chol.clear();
      break;
    }
    const Eigen::VectorXd z = solve_passive();
    if (z.minCoeff() > 0.0) {
      for (std::size_t k = 0; k < passive.size(); ++k) x[passive[k]] = z[static_cast<Index>(k)];
      break;
    }
    std::vector<Index> kept;
    for (std::size_t k = 0; k < passive.size(); ++k) {
      if (z[static_cast<Index>(k)] > 0.0) kept.push_back(passive[k]);
    }
    start = std::move(kept);
    passive.clear();
    chol.clear();
  }
  reindex();

  std::vector<char> excluded(static_cast<std::size_t>(m), 0);
  bool converged = false;
  while (iterations < max_iterations) {
    const Eigen::VectorXd g = gradient(pb, x, passive);
    Index entering = -1;
    double best = threshold;
    for (Index i = 0; i < m; ++i) {
      if (position[static_cast<std::size_t>(i)] >= 0 || excluded[static_cast<std::size_t>(i)]) continue;
      if (-g[i] > best) {
        best = -g[i];
        entering = i;
      }
    }
    if (entering < 0) {
      converged = true;
      break;
    }
    ++iterations;

    Eigen::VectorXd cross(static_cast<Index>(passive.size()));
    for (std::size_t k = 0; k < passive.size(); ++k) cross[static_cast<Index>(k)] = gram(global(passive[k]), global(entering));
    if (!chol.append(cross, gram(global(entering), global(entering)))) {
      excluded[static_cast<std::size_t>(entering)] = 1;
      continue;
    }
    passive.push_back(entering);
    position[static_cast<std::size_t>(entering)] = static_cast<Index>(passive.size()) - 1;

    Eigen::VectorXd z = solve_passive();
    if (z[z.size() - 1] <= 0.0) {
      // rounding made the entering component nonpositive; keep it out until the set changes
      chol.remove(static_cast<Index>(passive.size()) - 1);
      passive.pop_back();
      position[static_cast<std::size_t>(entering)] = -1;
      excluded[static_cast<std::size_t>(entering)] = 1;
      continue;
    }
    std::fill(excluded.begin(), excluded.end(), 0);

    while (z.size() > 0 && z.minCoeff() <= 0.0 && iterations < max_iterations) {
      ++iterations;
      double step = std::numeric_limits<double>::infinity();
      Index blocking = -1;
      for (Index k = 0; k < z.size(); ++k) {
        if (z[k] > 0.0) continue;
        const double xk = x[passive[static_cast<std::size_t>(k)]];
        const double a = xk / (xk - z[k]);
        if (a < step) {
          step = a;
          blocking = k;
        }
      }
      for (Index k = 0; k < z.size(); ++k) {
        double& xk = x[passive[static_cast<std::size_t>(k)]];
        xk += step * (z[k] - xk);
      }
      x[passive[static_cast<std::size_t>(blocking)]] = 0.0;
      std::vector<Index> drop;
      for (std::size_t k = 0; k < passive.size(); ++k) {
        if (x[passive[k]] <= 0.0) {
          x[passive[k]] = 0.0;
          drop.push_back(static_cast<Index>(k));
        }
      }
      drop_positions(drop);
      z = solve_passive();
    }
    if (z.size() > 0 && z.minCoeff() <= 0.0) break;  // iteration budget exhausted mid-step
    for (std::size_t k = 0; k < passive.size(); ++k) x[passive[k]] = z[static_cast<Index>(k)];
  }

  sol.iterations = iterations;
  sol.converged = converged;
  sol.passive = passive;
  std::sort(sol.passive.begin(), sol.passive.end());
  for (Index i = 0; i < m; ++i) {
    if (position[static_cast<std::size_t>(i)] < 0) x[i] = 0.0;
  }
  return sol;
}

ConeSolution solve_projected_gradient(const ConeProblem& pb, double tolerance, Index max_iterations,
                                      const Eigen::VectorXd* warm_start) {
  const auto m = static_cast<Index>(pb.mask.size());
  ConeSolution sol;
  sol.x = Eigen::VectorXd::Zero(m);
  if (m == 0) {
    sol.converged = true;
    return sol;
  }
  const Eigen::MatrixXd k = gather(pb.gram, pb.mask, pb.mask);
  const Eigen::VectorXd& b = pb.target;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  if (warm_start != nullptr && warm_start->size() == m) x = warm_start->cwiseMax(0.0);
  Eigen::VectorXd g = k * x - b;
  auto objective = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& grad) { return 0.5 * v.dot(grad - b); };

  constexpr int kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr Index kPolishEvery = 25;
  std::deque<double> history{objective(x, g)};
  double step = 1.0 / k.diagonal().maxCoeff();

  auto try_polish = [&](Eigen::VectorXd& out) {
    std::vector<Index> support;
    for (Index i = 0; i < m; ++i) {
      if (x[i] > 0.0) support.push_back(i);
    }
    if (support.empty()) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(gather(k, support, support));
    if (llt.info() != Eigen::Success) return false;
    Eigen::VectorXd rhs(static_cast<Index>(support.size()));
    for (std::size_t a = 0; a < support.size(); ++a) rhs[static_cast<Index>(a)] = b[support[a]];
    Eigen::VectorXd z = llt.solve(rhs);
    if (z.minCoeff() <= 0.0) return false;
    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(m);
    for (std::size_t a = 0; a < support.size(); ++a) candidate[support[a]] = z[static_cast<Index>(a)];
    if (kkt_violation(pb, candidate) > tolerance) return false;
    out = std::move(candidate);
    return true;
  };

  Index it = 0;
  for (; it < max_iterations; ++it) {
    if (kkt_violation(pb, x) <= tolerance) {
      sol.converged = true;
      break;
    }
    if (it > 0 && it % kPolishEvery == 0) {
      g = k * x - b;
      Eigen::VectorXd polished;
      if (try_polish(polished)) {
        x = std::move(polished);
        sol.converged = true;
        break;
      }
    }
    const Eigen::VectorXd d = (x - step * g).cwiseMax(0.0) - x;
    const double slope = g.dot(d);
    if (!(slope < 0.0)) {
      // the projected step stalled in floating point; finish on the support
      Eigen::VectorXd polished;
      if (try_polish(polished)) {
        x = std::move(polished);
        sol.converged = true;
      }
      break;
    }
    const Eigen::VectorXd kd = k * d;
    const double curvature = d.dot(kd);
    const double f = history.back();
    const double reference = *std::max_element(history.begin(), history.end());
    double lambda = 1.0;
    if (f + slope + 0.5 * curvature > reference + kArmijo * slope && curvature > 0.0) {
      lambda = std::min(1.0, -slope / curvature);
    }
    x += lambda * d;
    x = x.cwiseMax(0.0);
    g += lambda * kd;
    history.push_back(f + lambda * slope + 0.5 * lambda * lambda * curvature);
    if (history.size() > kMemory) history.pop_front();
    const double sy = lambda * lambda * curvature;
    const double ss = lambda * lambda * d.squaredNorm();
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-30, 1e30) : 1e30;
  }
  if (!sol.converged && kkt_violation(pb, x) <= tolerance) sol.converged = true;
  sol.iterations = it;
  sol.x = x;
  for (Index i = 0; i < m; ++i) {
    if (x[i] > 0.0) sol.passive.push_back(i);
  }
  return sol;
}

}  // namespace balayage::detail
