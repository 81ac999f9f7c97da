#pragma once

// Solvers for the cone-constrained quadratic program
//
//     minimize  1/2 x' K_AA x - b' x   subject to  x >= 0,
//
// where K_AA is the principal sub-block of a Gram matrix on the index set A.
// With b = (K mu)_A this is the energy-metric projection of mu onto the cone
// of nonnegative measures carried by A; with b = 1 it is the (unnormalised)
// equilibrium problem.

#include "balayage/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace balayage::detail {

struct ConeProblem {
  const Eigen::MatrixXd& gram;
  std::span<const Index> mask;  // sorted global indices of A
  Eigen::VectorXd target;       // b, one entry per mask index
  double scale;                 // residual scale, > 0
};

struct ConeSolution {
  Eigen::VectorXd x;           // one entry per mask index
  std::vector<Index> passive;  // local indices with x > 0, sorted
  Index iterations = 0;
  bool converged = false;
};

/// Lower-triangular Cholesky factor of K_PP that supports appending and
/// deleting one index at a time in O(k^2).
class UpdatableCholesky {
 public:
  explicit UpdatableCholesky(Index capacity);

  Index size() const noexcept { return k_; }
  void clear() noexcept { k_ = 0; }
  /// Replaces the factor with the Cholesky factor of `block`; false if not PD.
  bool reset(const Eigen::MatrixXd& block);
  /// Replaces the factor with a precomputed lower factor.
  void reset_from_factor(const Eigen::MatrixXd& lower);
  /// Appends a row/column with off-diagonal part `cross` and diagonal `diag`; false if not PD.
  bool append(const Eigen::VectorXd& cross, double diag);
  /// Deletes the row/column at `pos`.
  void remove(Index pos);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::MatrixXd l_;
  Index k_ = 0;
};

/// Lawson-Hanson active-set method in normal-equation form with incremental
/// factor updates. `warm_start` lists local indices to try as the initial passive
/// set (all of A when empty). `full_factor`, when given, is the Cholesky factor of
/// the whole Gram matrix and is reused if A is the full index set.
ConeSolution solve_active_set(const ConeProblem& problem, double tolerance, Index max_iterations,
                              const std::vector<Index>& warm_start,
                              const Eigen::LLT<Eigen::MatrixXd>* full_factor = nullptr);

/// Spectral projected gradient with Barzilai-Borwein steps and a nonmonotone
/// line search; periodically tries to finish exactly on the current support.
ConeSolution solve_projected_gradient(const ConeProblem& problem, double tolerance, Index max_iterations,
                                      const Eigen::VectorXd* warm_start = nullptr);

/// Largest relative KKT residual of a candidate local solution.
double kkt_violation(const ConeProblem& problem, const Eigen::VectorXd& x);

Eigen::MatrixXd gather(const Eigen::MatrixXd& gram, std::span<const Index> rows, std::span<const Index> cols);

}  // namespace balayage::detail
