#pragma once

// Periodic cell problem for one momentum p.  The unknowns are the periodic
// pair (w1, w2) with w_i = exp(-phi_i); on a uniform periodic grid the
// coupled operator
//
//   L1 w = -lap w1 + 2 p.grad w1 - div(grad psi1 w1) + (-|p|^2 + p.grad psi1 + nu1) w1 - nu2 w2
//   L2 w = -lap w2 + 2 p.grad w2 [- div(grad psi2 w2) + p.grad psi2 w2] + (-|p|^2 + nu2) w2 - nu1 w1
//
// satisfies L w = -Hbar(p) w for its Perron eigenpair.  Second-order central
// differences; the conservative drift uses face values and averaged fluxes so
// that at p = 0 every column of L sums to zero.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "homog/errors.hpp"
#include "homog/motor_model.hpp"
#include "homog/periodic_field.hpp"

namespace homog {

template <int Dim>
using Momentum = Point<Dim>;

struct EigenOptions {
  double tol = 1e-11;
  std::size_t max_iterations = 10000;
};

namespace detail {

template <int Dim>
double norm2(const Point<Dim>& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return s;
}

// Grid geometry of a periodic tensor grid with n points per axis.
template <int Dim>
struct Grid {
  std::size_t n;
  std::size_t size() const { return ipow(n, Dim); }
  double h() const { return 1.0 / static_cast<double>(n); }

  std::size_t neighbor(std::size_t idx, int axis, int step) const {
    const std::size_t stride = ipow(n, Dim - 1 - axis);
    const std::size_t k = (idx / stride) % n;
    const std::size_t k2 = (k + n + static_cast<std::size_t>(step + static_cast<int>(n))) % n;
    return idx - k * stride + k2 * stride;
  }
  std::size_t coord(std::size_t idx, int axis) const {
    return (idx / ipow(n, Dim - 1 - axis)) % n;
  }
  Point<Dim> position(std::size_t idx) const {
    Point<Dim> y{};
    for (int a = 0; a < Dim; ++a) y[a] = static_cast<double>(coord(idx, a)) * h();
    return y;
  }
};

template <int Dim>
std::vector<double> on_grid(const PeriodicField<Dim>& f, std::size_t n,
                            std::optional<std::type_identity_t<Point<Dim>>> shift = std::nullopt) {
  if (shift) return f.translate(*shift).resample(n);
  return f.resample(n);
}

}  // namespace detail

/// Coefficients of one species sampled on the cell grid.
struct SpeciesCoefficients {
  bool has_drift = false;
  std::vector<std::vector<double>> grad_nodes;  ///< [axis][node]
  std::vector<std::vector<double>> grad_faces;  ///< [axis][node]: value at node + h/2 e_axis
  std::vector<double> rate;                     ///< this species' leaving rate nu_i
};

template <int Dim>
SpeciesCoefficients sample_species(const std::optional<PeriodicField<Dim>>& psi,
                                   const PeriodicField<Dim>& rate, std::size_t n) {
  SpeciesCoefficients c;
  c.rate = detail::on_grid(rate, n);
  if (!psi) return c;
  c.has_drift = true;
  const double h = 1.0 / static_cast<double>(n);
  for (int a = 0; a < Dim; ++a) {
    const PeriodicField<Dim> g = psi->derivative(1, a);
    Point<Dim> shift{};
    shift[a] = 0.5 * h;
    c.grad_nodes.push_back(detail::on_grid(g, n));
    c.grad_faces.push_back(detail::on_grid(g, n, shift));
  }
  return c;
}

/// Discretized left-hand side of the periodic eigenproblem for one momentum.
template <int Dim>
struct DiscreteCellOperator {
  Momentum<Dim> p{};
  std::size_t n = 0;
  std::array<SpeciesCoefficients, 2> species;
  Eigen::SparseMatrix<double> matrix;  ///< L, acting on stacked (w1, w2)
  double peclet = 0.0;                 ///< max |2 p_a - d_a psi| over faces, both species

  std::size_t block() const { return detail::ipow(n, Dim); }
  double h() const { return 1.0 / static_cast<double>(n); }

  Eigen::VectorXd apply(const Eigen::VectorXd& w) const { return matrix * w; }
};

template <int Dim>
DiscreteCellOperator<Dim> assemble(const MotorModel<Dim>& model,
                                   const std::type_identity_t<Momentum<Dim>>& p,
                                   std::size_t n) {
  if (n < 16 || n % 2 != 0)
    throw InvalidGrid("cell grid needs an even N >= 16, got " + std::to_string(n));
  for (double v : p)
    if (!std::isfinite(v)) throw ValidationError("momentum must be finite");

  DiscreteCellOperator<Dim> op;
  op.p = p;
  op.n = n;
  op.species[0] = sample_species<Dim>(std::optional<PeriodicField<Dim>>(model.psi1), model.nu1, n);
  op.species[1] = sample_species<Dim>(model.psi2, model.nu2, n);

  const detail::Grid<Dim> grid{n};
  const std::size_t m = grid.size();
  const double h = grid.h();
  const double inv_h2 = 1.0 / (h * h);

  double peclet = 0.0;
  for (int a = 0; a < Dim; ++a) {
    for (const auto& sp : op.species) {
      if (!sp.has_drift) {
        peclet = std::max(peclet, std::abs(2.0 * p[a]));
        continue;
      }
      for (double g : sp.grad_faces[a]) peclet = std::max(peclet, std::abs(2.0 * p[a] - g));
    }
  }
  op.peclet = peclet;
  if (!(peclet * h < 2.0)) {
    const auto needed = static_cast<std::size_t>(2.0 * (std::floor(peclet / 4.0) + 1.0));
    const std::size_t n_required = std::max<std::size_t>(needed, 16);
    throw PecletViolation("grid Peclet number " + std::to_string(peclet * h) +
                              " >= 2; central differences need N >= " +
                              std::to_string(n_required),
                          n_required);
  }

  const double p2 = detail::norm2<Dim>(p);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * m * (2 + 2 * Dim));
  for (int s = 0; s < 2; ++s) {
    const auto& sp = op.species[s];
    const auto& other = op.species[1 - s];
    const std::size_t row0 = static_cast<std::size_t>(s) * m;
    const std::size_t col_other = static_cast<std::size_t>(1 - s) * m;
    for (std::size_t i = 0; i < m; ++i) {
      double diag = -p2 + sp.rate[i];
      for (int a = 0; a < Dim; ++a) {
        const std::size_t ip = grid.neighbor(i, a, +1);
        const std::size_t im = grid.neighbor(i, a, -1);
        double up = -inv_h2 + p[a] / h;
        double down = -inv_h2 - p[a] / h;
        diag += 2.0 * inv_h2;
        if (sp.has_drift) {
          const double gp = sp.grad_faces[a][i];
          const double gm = sp.grad_faces[a][im];
          diag += -(gp - gm) / (2.0 * h) + p[a] * sp.grad_nodes[a][i];
          up += -gp / (2.0 * h);
          down += gm / (2.0 * h);
        }
        trip.emplace_back(row0 + i, row0 + ip, up);
        trip.emplace_back(row0 + i, row0 + im, down);
      }
      trip.emplace_back(row0 + i, row0 + i, diag);
      trip.emplace_back(row0 + i, col_other + i, -other.rate[i]);
    }
  }
  op.matrix.resize(static_cast<Eigen::Index>(2 * m), static_cast<Eigen::Index>(2 * m));
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  return op;
}

inline DiscreteCellOperator<1> assemble(const MotorModel<1>& model, double p, std::size_t n) {
  return assemble<1>(model, Momentum<1>{p}, n);
}

/// Perron pair of L: eigenvalue `lambda` (= -Hbar) with a positive eigenvector.
struct PerronPair {
  double lambda = 0.0;
  Eigen::VectorXd vector;
  std::size_t iterations = 0;
};

namespace detail {

// Shift-and-invert iteration for the Perron root of a Metzler matrix G (the
// negated cell operator).  The shift always sits above the Collatz-Wielandt
// upper bound max_i (Gx)_i / x_i >= rho, so (sI - G) stays a nonsingular
// M-matrix, its inverse is positive, and every iterate remains positive.  The
// shift follows the bound down (Noda's variant), which converges in a handful
// of solves instead of the thousands a fixed shift would need.
inline PerronPair perron_iteration(const Eigen::SparseMatrix<double>& g, const EigenOptions& opt) {
  const Eigen::Index size = g.rows();
  double row_max = 0.0;
  for (Eigen::Index r = 0; r < size; ++r) {
    double acc = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(g, r); it; ++it) acc += std::abs(it.value());
    row_max = std::max(row_max, acc);
  }
  // column-major storage: this is the max absolute column sum, also a bound on rho(g)
  double shift = 1.0 + row_max;

  Eigen::SparseMatrix<double> ident(size, size);
  ident.setIdentity();
  Eigen::SparseMatrix<double> shifted = -g + ident;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(shifted);

  Eigen::VectorXd x = Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size));
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    shifted = -g + shift * ident;
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success)
      throw NonPositiveEigenvector("shifted cell operator is singular during Perron iteration");
    Eigen::VectorXd y = lu.solve(x);
    for (Eigen::Index i = 0; i < size; ++i) {
      if (!(y[i] > 0.0) || !std::isfinite(y[i]))
        throw NonPositiveEigenvector("Perron iterate lost positivity at component " +
                                     std::to_string(i));
    }
    x = y / y.sum();
    const Eigen::VectorXd gx = g * x;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < size; ++i) {
      const double r = gx[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double estimate = gx.sum();  // x sums to one
    const double scale = std::max(1.0, std::abs(estimate));
    // Collatz-Wielandt width cannot shrink below the rounding level of g x
    const double width_floor = 256.0 * std::numeric_limits<double>::epsilon() * row_max;
    const bool bracketed = hi - lo < std::max(opt.tol * scale, width_floor);
    if (it >= 2 && std::abs(estimate - prev) < opt.tol * scale && bracketed) {
      return PerronPair{estimate, x, it};
    }
    prev = estimate;
    shift = hi + std::max(0.1 * (hi - lo), 1e-9 * (1.0 + std::abs(hi)));
  }
  throw NoConvergence("Perron iteration did not converge within " +
                          std::to_string(opt.max_iterations) + " iterations",
                      opt.max_iterations);
}

}  // namespace detail

template <int Dim>
double chi_integral(const DiscreteCellOperator<Dim>& op, const Eigen::VectorXd& w);

/// Principal eigenpair of the discrete cell operator, normalized so that the
/// trapezoidal integral of chi1 + chi2 over the unit cell equals one.
template <int Dim>
PerronPair principal_eigenpair(const DiscreteCellOperator<Dim>& op, EigenOptions opt = {}) {
  if (!(opt.tol > 0.0)) throw ValidationError("eigen tolerance must be positive");
  const Eigen::SparseMatrix<double> g = -op.matrix;
  PerronPair pair = detail::perron_iteration(g, opt);
  pair.lambda = -pair.lambda;
  pair.vector /= chi_integral(op, pair.vector);
  return pair;
}

/// Principal eigenvector of the transposed operator, scaled so that the
/// discrete pairing with `primal` equals one.
template <int Dim>
PerronPair adjoint_eigenpair(const DiscreteCellOperator<Dim>& op, const PerronPair& primal,
                             EigenOptions opt = {}) {
  if (!(opt.tol > 0.0)) throw ValidationError("eigen tolerance must be positive");
  const Eigen::SparseMatrix<double> g = -Eigen::SparseMatrix<double>(op.matrix.transpose());
  PerronPair pair = detail::perron_iteration(g, opt);
  pair.lambda = -pair.lambda;
  const double scale = std::max(1.0, std::abs(primal.lambda));
  if (std::abs(pair.lambda - primal.lambda) > 10.0 * opt.tol * scale) {
    throw EigenvalueMismatch("adjoint eigenvalue " + std::to_string(pair.lambda) +
                             " differs from primal " + std::to_string(primal.lambda));
  }
  const double cell = std::pow(op.h(), Dim);
  const double pairing = cell * pair.vector.dot(primal.vector);
  pair.vector /= pairing;
  return pair;
}

/// Trapezoidal integral over [0,1]^Dim of chi1 + chi2 where
/// chi_i(y) = exp(-p.y) w_i(y mod 1); the endpoint y_a = 1 is included with
/// half weight, which makes the rule exact for constant w at any p.
template <int Dim>
double chi_integral(const DiscreteCellOperator<Dim>& op, const Eigen::VectorXd& w) {
  const std::size_t n = op.n;
  const std::size_t m = op.block();
  const double h = op.h();
  double total = 0.0;
  std::array<std::size_t, Dim> k{};
  const std::size_t count = detail::ipow(n + 1, Dim);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    double weight = 1.0;
    double dot = 0.0;
    std::size_t idx = 0;
    for (int a = Dim - 1; a >= 0; --a) {
      k[a] = rem % (n + 1);
      rem /= (n + 1);
    }
    for (int a = 0; a < Dim; ++a) {
      if (k[a] == 0 || k[a] == n) weight *= 0.5;
      weight *= h;
      dot += op.p[a] * static_cast<double>(k[a]) * h;
      idx = idx * n + (k[a] % n);
    }
    total += weight * std::exp(-dot) * (w[static_cast<Eigen::Index>(idx)] +
                                        w[static_cast<Eigen::Index>(m + idx)]);
  }
  return total;
}

template <int Dim>
struct CellSolution {
  Momentum<Dim> p{};
  std::size_t n = 0;
  double hbar = 0.0;
  std::vector<double> w1, w2;          ///< Perron eigenfunctions, positive
  std::vector<double> w1_adj, w2_adj;  ///< adjoint eigenfunctions, positive
  std::vector<double> phi1, phi2;      ///< correctors, phi_i = -ln w_i
  std::vector<double> chi1, chi2;      ///< chi_i = exp(-p.y) w_i
  double residual = 0.0;               ///< max-norm residual of the corrector equations
  std::size_t iterations = 0;
};

namespace detail {

template <int Dim>
struct FieldDerivs {
  std::vector<std::vector<double>> grad;  // [axis][node]
  std::vector<double> lap;
};

template <int Dim>
FieldDerivs<Dim> spectral_derivs(const std::vector<double>& samples, std::size_t n) {
  const PeriodicField<Dim> f(samples, n);
  FieldDerivs<Dim> d;
  for (int a = 0; a < Dim; ++a) {
    const PeriodicField<Dim> g = f.derivative(1, a);
    d.grad.emplace_back(g.samples().begin(), g.samples().end());
  }
  const PeriodicField<Dim> l = f.laplacian();
  d.lap.assign(l.samples().begin(), l.samples().end());
  return d;
}

template <int Dim>
FieldDerivs<Dim> model_derivs(const PeriodicField<Dim>& f, std::size_t n) {
  FieldDerivs<Dim> d;
  for (int a = 0; a < Dim; ++a) d.grad.push_back(on_grid(f.derivative(1, a), n));
  d.lap = on_grid(f.laplacian(), n);
  return d;
}

}  // namespace detail

/// Max-norm residual of the nonlinear corrector equations at the grid nodes,
/// with all derivatives of phi and psi taken spectrally.
template <int Dim>
double corrector_residual(const MotorModel<Dim>& model, const CellSolution<Dim>& sol) {
  const std::size_t n = sol.n;
  const std::size_t m = detail::ipow(n, Dim);
  const auto d1 = detail::spectral_derivs<Dim>(sol.phi1, n);
  const auto d2 = detail::spectral_derivs<Dim>(sol.phi2, n);
  const auto ps1 = detail::model_derivs(model.psi1, n);
  std::optional<detail::FieldDerivs<Dim>> ps2;
  if (model.psi2) ps2 = detail::model_derivs(*model.psi2, n);
  const auto nu1 = detail::on_grid(model.nu1, n);
  const auto nu2 = detail::on_grid(model.nu2, n);

  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double q1 = 0.0, q2 = 0.0, drift1 = 0.0, drift2 = 0.0;
    for (int a = 0; a < Dim; ++a) {
      const double g1 = d1.grad[a][i] + sol.p[a];
      const double g2 = d2.grad[a][i] + sol.p[a];
      q1 += g1 * g1;
      q2 += g2 * g2;
      drift1 += ps1.grad[a][i] * g1;
      if (ps2) drift2 += ps2->grad[a][i] * g2;
    }
    const double r1 = -d1.lap[i] + q1 - drift1 + ps1.lap[i] +
                      nu2[i] * std::exp(sol.phi1[i] - sol.phi2[i]) - nu1[i] - sol.hbar;
    double r2 = -d2.lap[i] + q2 + nu1[i] * std::exp(sol.phi2[i] - sol.phi1[i]) - nu2[i] - sol.hbar;
    if (ps2) r2 += -drift2 + ps2->lap[i];
    worst = std::max({worst, std::abs(r1), std::abs(r2)});
  }
  return worst;
}

/// Full cell solve: Perron pair, adjoint pair, correctors and residual.
template <int Dim>
CellSolution<Dim> solve_cell(const MotorModel<Dim>& model,
                             const std::type_identity_t<Momentum<Dim>>& p, std::size_t n,
                             EigenOptions opt = {}) {
  const auto op = assemble(model, p, n);
  const auto primal = principal_eigenpair(op, opt);
  const auto adjoint = adjoint_eigenpair(op, primal, opt);

  const std::size_t m = op.block();
  const detail::Grid<Dim> grid{n};
  CellSolution<Dim> sol;
  sol.p = p;
  sol.n = n;
  sol.hbar = -primal.lambda;
  sol.iterations = primal.iterations + adjoint.iterations;
  sol.w1.resize(m);
  sol.w2.resize(m);
  sol.w1_adj.resize(m);
  sol.w2_adj.resize(m);
  sol.phi1.resize(m);
  sol.phi2.resize(m);
  sol.chi1.resize(m);
  sol.chi2.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(m + i);
    sol.w1[i] = primal.vector[ii];
    sol.w2[i] = primal.vector[jj];
    sol.w1_adj[i] = adjoint.vector[ii];
    sol.w2_adj[i] = adjoint.vector[jj];
    if (!(sol.w1_adj[i] > 0.0) || !(sol.w2_adj[i] > 0.0))
      throw NonPositiveEigenvector("adjoint eigenvector is not strictly positive");
    sol.phi1[i] = -std::log(sol.w1[i]);
    sol.phi2[i] = -std::log(sol.w2[i]);
    double dot = 0.0;
    const auto y = grid.position(i);
    for (int a = 0; a < Dim; ++a) dot += p[a] * y[a];
    sol.chi1[i] = std::exp(-dot) * sol.w1[i];
    sol.chi2[i] = std::exp(-dot) * sol.w2[i];
  }
  sol.residual = corrector_residual(model, sol);
  return sol;
}

inline CellSolution<1> solve_cell(const MotorModel<1>& model, double p, std::size_t n,
                                  EigenOptions opt = {}) {
  return solve_cell<1>(model, Momentum<1>{p}, n, opt);
}

/// Gradient of Hbar from the primal/adjoint pair:
///   DHbar = 2p - [2<w1*, D w1> + 2<w2*, D w2> + <grad psi1 w1 w1*> (+ <grad psi2 w2 w2*>)]
///                / (<w1 w1*> + <w2 w2*>)
/// D is the same centered difference the operator uses, so the result is the
/// exact derivative of the discrete eigenvalue.
template <int Dim>
Momentum<Dim> dhbar(const CellSolution<Dim>& sol, const MotorModel<Dim>& model) {
  const std::size_t n = sol.n;
  if (sol.w1.size() != detail::ipow(n, Dim) || sol.w1_adj.size() != sol.w1.size())
    throw DegeneratePairing("cell solution lacks matching primal/adjoint fields");
  const detail::Grid<Dim> grid{n};
  const std::size_t m = grid.size();
  const double h = grid.h();
  const auto s1 = sample_species<Dim>(std::optional<PeriodicField<Dim>>(model.psi1), model.nu1, n);
  const auto s2 = sample_species<Dim>(model.psi2, model.nu2, n);

  double den = 0.0;
  for (std::size_t i = 0; i < m; ++i) den += sol.w1[i] * sol.w1_adj[i] + sol.w2[i] * sol.w2_adj[i];
  den *= std::pow(h, Dim);
  if (!(den >= 1e-14)) throw DegeneratePairing("primal/adjoint pairing is degenerate");

  Momentum<Dim> grad{};
  for (int a = 0; a < Dim; ++a) {
    double num = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t ip = grid.neighbor(i, a, +1);
      const std::size_t im = grid.neighbor(i, a, -1);
      const double dw1 = (sol.w1[ip] - sol.w1[im]) / (2.0 * h);
      const double dw2 = (sol.w2[ip] - sol.w2[im]) / (2.0 * h);
      num += 2.0 * sol.w1_adj[i] * dw1 + 2.0 * sol.w2_adj[i] * dw2;
      num += s1.grad_nodes[a][i] * sol.w1[i] * sol.w1_adj[i];
      if (s2.has_drift) num += s2.grad_nodes[a][i] * sol.w2[i] * sol.w2_adj[i];
    }
    num *= std::pow(h, Dim);
    grad[a] = 2.0 * sol.p[a] - num / den;
  }
  return grad;
}

/// Max-norm residual of the periodic w-system with spectral derivatives of the
/// discrete eigenfunctions, relative to max w.  Measures discretization error.
template <int Dim>
double w_form_residual(const MotorModel<Dim>& model, const CellSolution<Dim>& sol) {
  const std::size_t n = sol.n;
  const std::size_t m = detail::ipow(n, Dim);
  const auto d1 = detail::spectral_derivs<Dim>(sol.w1, n);
  const auto d2 = detail::spectral_derivs<Dim>(sol.w2, n);
  const auto ps1 = detail::model_derivs(model.psi1, n);
  std::optional<detail::FieldDerivs<Dim>> ps2;
  if (model.psi2) ps2 = detail::model_derivs(*model.psi2, n);
  const auto nu1 = detail::on_grid(model.nu1, n);
  const auto nu2 = detail::on_grid(model.nu2, n);
  const double p2 = detail::norm2<Dim>(sol.p);
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r1 = -d1.lap[i] - ps1.lap[i] * sol.w1[i] + (-p2 + nu1[i] + sol.hbar) * sol.w1[i] -
                nu2[i] * sol.w2[i];
    double r2 = -d2.lap[i] + (-p2 + nu2[i] + sol.hbar) * sol.w2[i] - nu1[i] * sol.w1[i];
    for (int a = 0; a < Dim; ++a) {
      r1 += 2.0 * sol.p[a] * d1.grad[a][i] - ps1.grad[a][i] * d1.grad[a][i] +
            sol.p[a] * ps1.grad[a][i] * sol.w1[i];
      r2 += 2.0 * sol.p[a] * d2.grad[a][i];
      if (ps2) {
        r2 += -ps2->grad[a][i] * d2.grad[a][i] + sol.p[a] * ps2->grad[a][i] * sol.w2[i];
      }
    }
    if (ps2) r2 += -ps2->lap[i] * sol.w2[i];
    worst = std::max({worst, std::abs(r1), std::abs(r2)});
    scale = std::max({scale, sol.w1[i], sol.w2[i]});
  }
  return worst / scale;
}

/// Residual of the untransformed chi-system, discretized with centered
/// differences on the twisted-periodic grid (chi(y + e_a) = exp(-p_a) chi(y)),
/// mapped back to w units and taken relative to max w.
template <int Dim>
double chi_form_residual(const MotorModel<Dim>& model, const CellSolution<Dim>& sol) {
  const std::size_t n = sol.n;
  const detail::Grid<Dim> grid{n};
  const std::size_t m = grid.size();
  const double h = grid.h();
  const auto ps1 = detail::model_derivs(model.psi1, n);
  std::optional<detail::FieldDerivs<Dim>> ps2;
  if (model.psi2) ps2 = detail::model_derivs(*model.psi2, n);
  const auto nu1 = detail::on_grid(model.nu1, n);
  const auto nu2 = detail::on_grid(model.nu2, n);

  // neighbor value of chi along axis a, applying the twist across the seam
  auto neighbor_chi = [&](const std::vector<double>& chi, std::size_t i, int a, int step) {
    const std::size_t j = grid.neighbor(i, a, step);
    const std::size_t k = grid.coord(i, a);
    double twist = 1.0;
    if (step > 0 && k == n - 1) twist = std::exp(-sol.p[a]);
    if (step < 0 && k == 0) twist = std::exp(sol.p[a]);
    return twist * chi[j];
  };

  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double lap1 = 0.0, lap2 = 0.0, adv1 = 0.0, adv2 = 0.0, dot = 0.0;
    const auto y = grid.position(i);
    for (int a = 0; a < Dim; ++a) {
      dot += sol.p[a] * y[a];
      const double c1p = neighbor_chi(sol.chi1, i, a, +1), c1m = neighbor_chi(sol.chi1, i, a, -1);
      const double c2p = neighbor_chi(sol.chi2, i, a, +1), c2m = neighbor_chi(sol.chi2, i, a, -1);
      lap1 += (c1p - 2.0 * sol.chi1[i] + c1m) / (h * h);
      lap2 += (c2p - 2.0 * sol.chi2[i] + c2m) / (h * h);
      adv1 += ps1.grad[a][i] * (c1p - c1m) / (2.0 * h);
      if (ps2) adv2 += ps2->grad[a][i] * (c2p - c2m) / (2.0 * h);
    }
    double r1 = -lap1 - adv1 - ps1.lap[i] * sol.chi1[i] + nu1[i] * sol.chi1[i] -
                nu2[i] * sol.chi2[i] + sol.hbar * sol.chi1[i];
    double r2 = -lap2 + nu2[i] * sol.chi2[i] - nu1[i] * sol.chi1[i] + sol.hbar * sol.chi2[i];
    if (ps2) r2 += -adv2 - ps2->lap[i] * sol.chi2[i];
    const double back = std::exp(dot);
    worst = std::max({worst, std::abs(r1) * back, std::abs(r2) * back});
    scale = std::max({scale, sol.w1[i], sol.w2[i]});
  }
  return worst / scale;
}

}  // namespace homog
