#include "balayage/kernel.hpp"

#include "balayage/error.hpp"
#include "balayage/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>

namespace balayage {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double unit_ball_volume(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

// |x|^s from the squared distance, with the common exponents special-cased.
double power_of_squared(double r2, double s) {
  if (s == -1.0) return 1.0 / std::sqrt(r2);
  if (s == -2.0) return 1.0 / r2;
  if (s == -0.5) return 1.0 / std::sqrt(std::sqrt(r2));
  return std::pow(r2, 0.5 * s);
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double d = x[a] - y[a];
    s += d * d;
  }
  return s;
}

// Regular part of the ball Green kernel: (r/|y'|)^(n-2) |x - y*|^(2-n), y* the inversion of y.
double green_regular_part(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  const int n = spec.dim;
  const double r = spec.radius;
  double y2 = 0.0;
  for (int a = 0; a < n; ++a) {
    const double d = y[static_cast<std::size_t>(a)] - spec.center[static_cast<std::size_t>(a)];
    y2 += d * d;
  }
  if (y2 == 0.0) return std::pow(r, 2.0 - n);
  const double scale = r * r / y2;
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    const double c = spec.center[static_cast<std::size_t>(a)];
    const double ystar = c + scale * (y[static_cast<std::size_t>(a)] - c);
    const double d = x[static_cast<std::size_t>(a)] - ystar;
    s += d * d;
  }
  return std::pow(r / std::sqrt(y2), n - 2.0) * power_of_squared(s, 2.0 - n);
}

double radial_distance(const KernelSpec& spec, std::span<const double> p) {
  double s = 0.0;
  for (int a = 0; a < spec.dim; ++a) {
    const double d = p[static_cast<std::size_t>(a)] - spec.center[static_cast<std::size_t>(a)];
    s += d * d;
  }
  return std::sqrt(s);
}

void require_point_dim(const KernelSpec& spec, std::span<const double> p) {
  if (p.size() != static_cast<std::size_t>(spec.dim)) {
    throw Error(ErrorKind::invalid_argument, "point dimension " + std::to_string(p.size()) +
                                                 " does not match kernel dimension " + std::to_string(spec.dim));
  }
}

}  // namespace

const char* to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::riesz: return "riesz";
    case KernelFamily::newtonian: return "newtonian";
    case KernelFamily::green_ball: return "green_ball";
  }
  return "unknown";
}

KernelSpec KernelSpec::riesz(double alpha, int dim) {
  KernelSpec s;
  s.family = KernelFamily::riesz;
  s.alpha = alpha;
  s.dim = dim;
  s.validate();
  return s;
}

KernelSpec KernelSpec::newtonian(int dim) {
  KernelSpec s;
  s.family = KernelFamily::newtonian;
  s.alpha = 2.0;
  s.dim = dim;
  s.validate();
  return s;
}

KernelSpec KernelSpec::green_ball(std::vector<double> center, double radius) {
  KernelSpec s;
  s.family = KernelFamily::green_ball;
  s.alpha = 2.0;
  s.dim = static_cast<int>(center.size());
  s.center = std::move(center);
  s.radius = radius;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "kernel dimension must be >= 1");
  switch (family) {
    case KernelFamily::riesz:
      if (!(alpha > 0.0 && alpha < dim)) {
        throw Error(ErrorKind::invalid_argument, "riesz kernel requires 0 < alpha < n (alpha = " + std::to_string(alpha) +
                                                     ", n = " + std::to_string(dim) + ")");
      }
      break;
    case KernelFamily::newtonian:
      if (dim < 3) throw Error(ErrorKind::unsupported_dimension, "newtonian kernel requires n >= 3");
      if (alpha != 2.0) throw Error(ErrorKind::invalid_argument, "newtonian kernel has alpha = 2");
      break;
    case KernelFamily::green_ball:
      if (dim < 3) throw Error(ErrorKind::unsupported_dimension, "green_ball kernel requires n >= 3");
      if (center.size() != static_cast<std::size_t>(dim)) {
        throw Error(ErrorKind::invalid_argument, "green_ball center dimension does not match n");
      }
      if (!(radius > 0.0)) throw Error(ErrorKind::invalid_argument, "green_ball radius must be > 0");
      break;
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os << to_string(family) << "(n=" << dim;
  if (family == KernelFamily::riesz) os << ", alpha=" << alpha;
  if (family == KernelFamily::green_ball) os << ", radius=" << radius;
  os << ")";
  return os.str();
}

double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  require_point_dim(spec, x);
  require_point_dim(spec, y);
  if (spec.family == KernelFamily::green_ball) {
    if (radial_distance(spec, y) >= spec.radius) {
      throw Error(ErrorKind::domain, "green_ball kernel: source point lies on or outside the ball");
    }
    if (radial_distance(spec, x) > spec.radius) {
      throw Error(ErrorKind::domain, "green_ball kernel: evaluation point lies outside the ball");
    }
  }
  const double r2 = squared_distance(x, y);
  if (r2 == 0.0) return kInf;
  const double s = spec.exponent() - spec.dim;
  const double singular = power_of_squared(r2, s);
  if (spec.family != KernelFamily::green_ball) return singular;
  return singular - green_regular_part(spec, x, y);
}

std::string DiagRule::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == Kind::fixed) os << "(" << value << ")";
  return os.str();
}

const char* to_string(DiagRule::Kind kind) {
  switch (kind) {
    case DiagRule::Kind::automatic: return "automatic";
    case DiagRule::Kind::equal_volume_ball: return "equal_volume_ball";
    case DiagRule::Kind::equal_area_disk: return "equal_area_disk";
    case DiagRule::Kind::nearest_neighbor: return "nearest_neighbor";
    case DiagRule::Kind::fixed: return "fixed";
  }
  return "unknown";
}

DiagRule::Kind parse_diag_rule_kind(const std::string& name) {
  for (auto k : {DiagRule::Kind::automatic, DiagRule::Kind::equal_volume_ball, DiagRule::Kind::equal_area_disk,
                 DiagRule::Kind::nearest_neighbor, DiagRule::Kind::fixed}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::config, "unknown diag_rule kind '" + name + "'");
}

double riesz_ball_constant(double alpha, int n) {
  const double a = 0.5 * (n + 1.0);
  return n * std::pow(2.0, alpha) / alpha * std::exp(log_beta(0.5 * (alpha + 1.0), a) - log_beta(a, 0.5));
}

double riesz_flat_disk_center_potential(double alpha, int n, int m) {
  const double s = alpha - n;
  if (!(s + m > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "disk self-potential diverges: alpha must exceed n - m");
  }
  return m / (s + m);
}

double diagonal_entry(const KernelSpec& spec, const DiscreteSpace& space, Index i, const DiagRule& rule) {
  const double s = spec.exponent() - spec.dim;
  const int m = space.intrinsic_dim();
  const double w = space.cell_weight(i);
  double singular = 0.0;
  switch (rule.kind) {
    case DiagRule::Kind::fixed:
      return rule.value;
    case DiagRule::Kind::automatic:
      return diagonal_entry(spec, space, i,
                            DiagRule{m == space.dim() ? DiagRule::Kind::equal_volume_ball : DiagRule::Kind::equal_area_disk});
    case DiagRule::Kind::equal_volume_ball: {
      if (m != space.dim()) {
        throw Error(ErrorKind::invalid_argument, "equal_volume_ball diagonal rule needs volume cells (intrinsic_dim = dim)");
      }
      const double rho = std::pow(w / unit_ball_volume(m), 1.0 / m);
      singular = riesz_ball_constant(spec.exponent(), spec.dim) * std::pow(rho, s);
      break;
    }
    case DiagRule::Kind::equal_area_disk: {
      const double rho = std::pow(w / unit_ball_volume(m), 1.0 / m);
      singular = riesz_flat_disk_center_potential(spec.exponent(), spec.dim, m) * std::pow(rho, s);
      break;
    }
    case DiagRule::Kind::nearest_neighbor: {
      const double h = space.nearest_neighbor_distance(i);
      if (!std::isfinite(h)) {
        throw Error(ErrorKind::invalid_argument, "nearest_neighbor diagonal rule needs at least two points");
      }
      singular = std::pow(0.5 * h, s);
      break;
    }
  }
  if (spec.family != KernelFamily::green_ball) return singular;
  const auto p = space.point(i);
  return singular - green_regular_part(spec, p, p);
}

EnergyForm EnergyForm::from_gram(std::string space_id, KernelSpec spec, Eigen::MatrixXd gram, DiagRule rule) {
  const Index n = gram.rows();
  if (n < 1 || gram.cols() != n) throw Error(ErrorKind::invalid_argument, "Gram matrix must be square and nonempty");
  if (n > kMaxAssemblySize) {
    throw Error(ErrorKind::size_limit, "Gram matrix of size " + std::to_string(n) + " exceeds the dense limit " +
                                           std::to_string(kMaxAssemblySize));
  }
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double v = gram(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorKind::invalid_argument, "Gram entries must be finite and >= 0 (entry " + std::to_string(i) +
                                                     "," + std::to_string(j) + ")");
      }
      if (v != gram(j, i)) throw Error(ErrorKind::invalid_argument, "Gram matrix is not symmetric");
    }
  }

  auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(gram);
  if (llt->info() != Eigen::Success) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::Index where = 0;
    const double pivot = ldlt.vectorD().minCoeff(&where);
    Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(static_cast<int>(n), 0, static_cast<int>(n - 1));
    perm = ldlt.transpositionsP().transpose() * perm;
    const long original = perm[where];
    std::ostringstream os;
    os << "energy principle violated: Gram matrix is not strictly positive definite (smallest pivot " << pivot
       << " at point " << original << ")";
    throw EnergyPrincipleError(os.str(), pivot, original);
  }

  EnergyForm form;
  form.space_id_ = std::move(space_id);
  form.spec_ = std::move(spec);
  form.rule_ = rule;
  form.gram_ = std::move(gram);
  // keep the factor only while it fits comfortably next to the matrix
  if (n <= 10000) form.factor_ = std::move(llt);
  return form;
}

EnergyForm assemble(const KernelSpec& spec, const DiscreteSpace& space, DiagRule rule) {
  spec.validate();
  if (space.dim() != spec.dim) {
    throw Error(ErrorKind::invalid_argument, "space dimension " + std::to_string(space.dim()) +
                                                 " does not match kernel dimension " + std::to_string(spec.dim));
  }
  const Index n = space.size();
  if (n > kMaxAssemblySize) {
    throw Error(ErrorKind::size_limit, "space of " + std::to_string(n) + " points exceeds the dense limit " +
                                           std::to_string(kMaxAssemblySize));
  }
  if (spec.family == KernelFamily::green_ball) {
    for (Index i = 0; i < n; ++i) {
      if (!(radial_distance(spec, space.point(i)) < spec.radius)) {
        throw Error(ErrorKind::domain, "green_ball kernel: point " + std::to_string(i) + " is not strictly inside the ball");
      }
    }
  }
  if (rule.kind == DiagRule::Kind::automatic) {
    rule.kind = space.intrinsic_dim() == space.dim() ? DiagRule::Kind::equal_volume_ball : DiagRule::Kind::equal_area_disk;
  }

  const double s = spec.exponent() - spec.dim;
  const int dim = space.dim();
  Eigen::MatrixXd gram(n, n);
  parallel_for(0, n, [&](long i) {
    gram(i, i) = diagonal_entry(spec, space, i, rule);
    std::vector<double> xi;
    if (spec.family == KernelFamily::green_ball) xi = space.point(i);
    for (Index j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const double d = space.coord(i, a) - space.coord(j, a);
        r2 += d * d;
      }
      double v = power_of_squared(r2, s);
      if (spec.family == KernelFamily::green_ball) v -= green_regular_part(spec, xi, space.point(j));
      gram(i, j) = v;
      gram(j, i) = v;
    }
  });
  return EnergyForm::from_gram(space.id(), spec, std::move(gram), rule);
}

Eigen::VectorXd potential(const EnergyForm& form, const DiscreteMeasure& nu) {
  require_same_space(form.space_id(), nu.space_id(), "measure");
  return form.gram() * nu.weights();
}

Eigen::VectorXd potential(const EnergyForm& form, const SignedMeasure& nu) {
  return potential(form, nu.plus) - potential(form, nu.minus);
}

double inner_product(const EnergyForm& form, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_same_space(form.space_id(), mu.space_id(), "measure");
  require_same_space(form.space_id(), nu.space_id(), "measure");
  return mu.weights().dot(form.gram() * nu.weights());
}

double inner_product(const EnergyForm& form, const SignedMeasure& mu, const SignedMeasure& nu) {
  return inner_product(form, mu.plus, nu.plus) - inner_product(form, mu.plus, nu.minus) -
         inner_product(form, mu.minus, nu.plus) + inner_product(form, mu.minus, nu.minus);
}

double energy_norm(const EnergyForm& form, const DiscreteMeasure& mu) {
  return std::sqrt(std::max(0.0, inner_product(form, mu, mu)));
}

double energy_norm(const EnergyForm& form, const SignedMeasure& mu) {
  return energy_norm(form, mu.weights());
}

double energy_norm(const EnergyForm& form, const Eigen::VectorXd& weights) {
  if (weights.size() != form.size()) throw Error(ErrorKind::space_mismatch, "weight vector length does not match the form");
  return std::sqrt(std::max(0.0, weights.dot(form.gram() * weights)));
}

DominationReport discrete_domination(const EnergyForm& form, double tolerance) {
  const Index n = form.size();
  Eigen::MatrixXd inv;
  if (form.factor() != nullptr) {
    inv = form.factor()->solve(Eigen::MatrixXd::Identity(n, n));
  } else {
    inv = Eigen::LLT<Eigen::MatrixXd>(form.gram()).solve(Eigen::MatrixXd::Identity(n, n));
  }
  DominationReport r;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const double v = inv(i, j) / std::sqrt(inv(i, i) * inv(j, j));
      if (v > r.worst_offdiagonal) {
        r.worst_offdiagonal = v;
        r.worst_pair = {i, j};
      }
    }
  }
  r.holds = r.worst_offdiagonal <= tolerance;
  return r;
}

}  // namespace balayage
