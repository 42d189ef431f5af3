#pragma once

// Finite-volume simulator for the eps-scaled two-state system on a 1-D torus
//
//   n1_t - eps n1_xx - (n1 psi1'(x/eps))_x + nu1 n1 / eps = nu2 n2 / eps
//   n2_t - eps n2_xx [- (n2 psi2'(x/eps))_x] + nu2 n2 / eps = nu1 n1 / eps
//
// Strang splitting: half reaction step (closed form), full transport step
// (explicit upwind drift, backward-Euler diffusion), half reaction step.  All
// substeps are in conservation form, so the total mass only moves by rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homog/errors.hpp"
#include "homog/io.hpp"
#include "homog/motor_model.hpp"

namespace homog {

struct Bump {
  double center = 0.0;
  double mass = 1.0;
};

/// Torus of `periods` potential periods, `cells_per_period` cells each.
struct DomainSpec {
  std::size_t periods = 64;
  std::size_t cells_per_period = 64;
};

/// Smallest even period count whose torus covers [-half_length, half_length].
inline DomainSpec domain_for(double epsilon, double half_length, std::size_t cells_per_period = 64) {
  auto periods = static_cast<std::size_t>(std::ceil(2.0 * half_length / epsilon));
  if (periods % 2 != 0) ++periods;
  return DomainSpec{std::max<std::size_t>(periods, 2), cells_per_period};
}

namespace detail {

// Constant-coefficient cyclic tridiagonal system (1 + 2r) x_j - r (x_{j-1} + x_{j+1}) = b_j,
// solved by the Sherman-Morrison reduction to a plain tridiagonal system.
class CyclicDiffusionSolver {
 public:
  CyclicDiffusionSolver() = default;
  CyclicDiffusionSolver(std::size_t size, double r) : size_(size), r_(r) {
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;
    gamma_ = -diag;
    // modified diagonal: first entry diag - gamma, last diag - off*off/gamma
    cprime_.resize(size);
    inv_denom_.resize(size);
    double prev_c = 0.0;
    for (std::size_t j = 0; j < size; ++j) {
      double d = diag;
      if (j == 0) d = diag - gamma_;
      if (j + 1 == size) d = diag - off * off / gamma_;
      const double den = d - (j == 0 ? 0.0 : off * prev_c);
      inv_denom_[j] = 1.0 / den;
      cprime_[j] = off / den;
      prev_c = cprime_[j];
    }
    z_.assign(size, 0.0);
    z_[0] = gamma_;
    z_[size - 1] = off;
    solve_plain(z_);
    const double off_v = off / gamma_;
    factor_ = 1.0 + z_[0] + off_v * z_[size - 1];
  }

  double r() const noexcept { return r_; }
  std::size_t size() const noexcept { return size_; }

  /// Overwrites rhs with the solution.
  void solve(std::vector<double>& rhs) const {
    solve_plain(rhs);
    const double off_v = -r_ / gamma_;
    const double fact = (rhs[0] + off_v * rhs[size_ - 1]) / factor_;
    for (std::size_t j = 0; j < size_; ++j) rhs[j] -= fact * z_[j];
  }

  /// One implicit step applied in flux form, n += r (u_{j+1} - u_j) - r (u_j - u_{j-1}) with u
  /// the implicit solution, so the total changes only by rounding that does not accumulate.
  void diffuse(std::vector<double>& n, std::vector<double>& u) const {
    u = n;
    solve(u);
    const double last = r_ * (u[0] - u[size_ - 1]);
    double prev = last;
    for (std::size_t j = 0; j < size_; ++j) {
      const double f = j + 1 < size_ ? r_ * (u[j + 1] - u[j]) : last;
      const double v = n[j] + (f - prev);
      n[j] = v >= 0.0 ? v : u[j];
      prev = f;
    }
  }

 private:
  void solve_plain(std::vector<double>& x) const {
    const double off = -r_;
    x[0] *= inv_denom_[0];
    for (std::size_t j = 1; j < size_; ++j) x[j] = (x[j] - off * x[j - 1]) * inv_denom_[j];
    for (std::size_t j = size_ - 1; j-- > 0;) x[j] -= cprime_[j] * x[j + 1];
  }

  std::size_t size_ = 0;
  double r_ = 0.0;
  double gamma_ = 0.0;
  double factor_ = 1.0;
  std::vector<double> cprime_, inv_denom_, z_;
};

struct StepCache {
  double dt = -1.0;
  CyclicDiffusionSolver diffusion;
  std::vector<double> decay;      // exp(-(nu1 + nu2) dt / (2 eps)) per cell
  std::vector<double> share1;     // nu2 / (nu1 + nu2): equilibrium fraction of state 1
  std::vector<double> scratch;
};

}  // namespace detail

/// Densities of both states on the torus plus the data needed to advance them.
struct SimState {
  double epsilon = 0.0;
  std::size_t periods = 0;
  std::size_t cells_per_period = 0;
  double h = 0.0;
  double length = 0.0;
  double x_left = 0.0;
  std::vector<double> x;  ///< cell centers, x_j = x_left + j h
  std::vector<double> n1, n2;
  double t = 0.0;
  double initial_mass = 0.0;
  double A = 0.0;  ///< envelope slope: n_i(x, 0) <= exp((-A d(x) + B) / eps)
  double B = 0.0;
  std::vector<double> bump_centers;
  double anchor = 0.0;  ///< reference point for unwrapping torus coordinates

  // coefficients on the mesh
  std::vector<double> u1_face, u2_face;  ///< drift velocity -psi'(x/eps) at x_j + h/2
  std::vector<double> nu1, nu2;
  std::uint64_t model_fingerprint = 0;
  std::string model_name;

  mutable detail::StepCache cache;

  std::size_t cells() const noexcept { return x.size(); }

  double total_mass() const {
    double s = 0.0;
    for (std::size_t j = 0; j < n1.size(); ++j) s += n1[j] + n2[j];
    return s * h;
  }

  double max_speed() const {
    double m = 0.0;
    for (double u : u1_face) m = std::max(m, std::abs(u));
    for (double u : u2_face) m = std::max(m, std::abs(u));
    return m;
  }

  /// Signed displacement from `ref` to x on the torus, in [-L/2, L/2).
  double wrap(double dx) const {
    const double half = 0.5 * length;
    dx = std::fmod(dx + half, length);
    if (dx < 0.0) dx += length;
    return dx - half;
  }
};

namespace detail {

// psi'(y) sampled at y = offset + k / m, k = 0..m-1
inline std::vector<double> period_table(const PeriodicField1& dpsi, std::size_t m, double offset) {
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k)
    out[k] = dpsi(offset + static_cast<double>(k) / static_cast<double>(m));
  return out;
}

}  // namespace detail

/// State with caller-supplied densities (used for custom initial data).
inline SimState make_state(const MotorModel1& model, double epsilon, const DomainSpec& domain,
                           std::vector<double> n1, std::vector<double> n2) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive");
  if (domain.periods < 2 || domain.cells_per_period < 4)
    throw InvalidGrid("simulation domain needs >= 2 periods and >= 4 cells per period");
  SimState s;
  s.epsilon = epsilon;
  s.periods = domain.periods;
  s.cells_per_period = domain.cells_per_period;
  const std::size_t cells = domain.periods * domain.cells_per_period;
  s.h = epsilon / static_cast<double>(domain.cells_per_period);
  s.length = epsilon * static_cast<double>(domain.periods);
  s.x_left = -0.5 * s.length;
  if (n1.size() != cells || n2.size() != cells)
    throw InvalidMass("initial densities must have one value per cell (" + std::to_string(cells) + ")");
  for (std::size_t j = 0; j < cells; ++j) {
    if (!(n1[j] >= 0.0) || !(n2[j] >= 0.0) || !std::isfinite(n1[j]) || !std::isfinite(n2[j]))
      throw InvalidMass("initial densities must be finite and nonnegative");
  }
  s.x.resize(cells);
  for (std::size_t j = 0; j < cells; ++j) s.x[j] = s.x_left + static_cast<double>(j) * s.h;
  s.n1 = std::move(n1);
  s.n2 = std::move(n2);
  s.initial_mass = s.total_mass();
  if (!(s.initial_mass > 0.0)) throw InvalidMass("initial total mass must be positive");

  // x_j / eps = -periods/2 + j/m, so the fast variable repeats every m cells
  const double offset = 0.5 * static_cast<double>(domain.periods % 2);
  const std::size_t m = domain.cells_per_period;
  const double half_cell = 0.5 / static_cast<double>(m);
  auto tile = [&](const std::vector<double>& period, double sign) {
    std::vector<double> out(cells);
    for (std::size_t j = 0; j < cells; ++j) out[j] = sign * period[j % m];
    return out;
  };
  s.u1_face = tile(detail::period_table(model.psi1.derivative(1), m, offset + half_cell), -1.0);
  if (model.psi2)
    s.u2_face = tile(detail::period_table(model.psi2->derivative(1), m, offset + half_cell), -1.0);
  s.nu1 = tile(detail::period_table(model.nu1, m, offset), 1.0);
  s.nu2 = tile(detail::period_table(model.nu2, m, offset), 1.0);
  s.model_fingerprint = model.fingerprint();
  s.model_name = model.name;

  double mass_x = 0.0;
  for (std::size_t j = 0; j < cells; ++j) mass_x += (s.n1[j] + s.n2[j]) * s.x[j];
  s.anchor = mass_x * s.h / s.initial_mass;
  return s;
}

/// Sum of exponential bumps, each split evenly between the two states:
///   n_i(x, 0) = sum_j (m_j / 2) c_j exp(-A |x - x_j| / eps),
/// with c_j chosen so that the discrete mass of bump j is exactly m_j.
inline SimState init_state(const MotorModel1& model, double epsilon, const DomainSpec& domain,
                           const std::vector<Bump>& bumps, double A = 2.0) {
  if (!(A > 0.0)) throw ValidationError("envelope constant A must be positive");
  if (bumps.empty()) throw InvalidMass("at least one bump is required");
  double total = 0.0;
  for (const auto& b : bumps) {
    if (!(b.mass >= 0.0) || !std::isfinite(b.mass)) throw InvalidMass("bump masses must be nonnegative");
    total += b.mass;
  }
  if (!(total > 0.0)) throw InvalidMass("total bump mass must be positive");
  const std::size_t cells = domain.periods * domain.cells_per_period;
  const double h = epsilon / static_cast<double>(domain.cells_per_period);
  const double length = epsilon * static_cast<double>(domain.periods);
  for (const auto& b : bumps) {
    if (!(std::abs(b.center) <= 0.5 * length - 10.0 * epsilon))
      throw DomainTooSmall("bump at " + std::to_string(b.center) +
                           " lies within 10 eps of the torus seam");
  }

  std::vector<double> n1(cells, 0.0), n2(cells, 0.0);
  std::vector<double> profile(cells);
  double env = 0.0;
  for (const auto& b : bumps) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      const double xj = -0.5 * length + static_cast<double>(j) * h;
      double d = std::fmod(std::abs(xj - b.center), length);
      d = std::min(d, length - d);
      profile[j] = std::exp(-A * d / epsilon);
      sum += profile[j];
    }
    const double c = 1.0 / (h * sum);
    for (std::size_t j = 0; j < cells; ++j) {
      n1[j] += 0.5 * b.mass * c * profile[j];
      n2[j] += 0.5 * b.mass * c * profile[j];
    }
    env += 0.5 * b.mass * c;
  }
  SimState s = make_state(model, epsilon, domain, std::move(n1), std::move(n2));
  s.A = A;
  s.B = epsilon * std::log(env);
  for (const auto& b : bumps) s.bump_centers.push_back(b.center);
  if (bumps.size() == 1) s.anchor = bumps.front().center;
  return s;
}

/// Largest admissible time step: dt * max|drift| / h <= 0.9.
inline double max_stable_dt(const SimState& s) {
  const double u = s.max_speed();
  return u > 0.0 ? 0.9 * s.h / u : std::numeric_limits<double>::infinity();
}

namespace detail {

inline void prepare(const SimState& s, double dt) {
  auto& c = s.cache;
  if (c.dt == dt && c.diffusion.size() == s.cells()) return;
  c.dt = dt;
  c.diffusion = CyclicDiffusionSolver(s.cells(), s.epsilon * dt / (s.h * s.h));
  c.decay.resize(s.cells());
  c.share1.resize(s.cells());
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double k = (s.nu1[j] + s.nu2[j]) / s.epsilon;
    c.decay[j] = std::exp(-k * 0.5 * dt);
    c.share1[j] = s.nu2[j] / (s.nu1[j] + s.nu2[j]);
  }
}

// exact solution of the linear switching ODE over dt/2: the sum is invariant,
// each state relaxes to its equilibrium share at rate (nu1 + nu2)/eps
inline void react_half(SimState& s) {
  const auto& c = s.cache;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double sum = s.n1[j] + s.n2[j];
    const double moved = (s.n1[j] - c.share1[j] * sum) * (1.0 - c.decay[j]);
    s.n1[j] -= moved;
    s.n2[j] += moved;
  }
}

inline void upwind(std::vector<double>& n, const std::vector<double>& u, double dt, double h) {
  const std::size_t cells = n.size();
  const double lam = dt / h;
  auto face = [&](std::size_t j, double left, double right) {
    return lam * (u[j] > 0.0 ? u[j] * left : u[j] * right);
  };
  const double n0 = n[0];
  const double last = face(cells - 1, n[cells - 1], n0);
  double prev = last;
  for (std::size_t j = 0; j + 1 < cells; ++j) {
    const double f = face(j, n[j], n[j + 1]);
    n[j] -= f - prev;
    prev = f;
  }
  n[cells - 1] -= last - prev;
}

}  // namespace detail

/// Advances the state by dt in place.
inline void advance(SimState& s, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
  const double dt_max = max_stable_dt(s);
  if (dt > dt_max * (1.0 + 1e-12))
    throw CflViolation("time step " + std::to_string(dt) + " exceeds upwind limit " +
                           std::to_string(dt_max),
                       dt_max);
  detail::prepare(s, dt);
  detail::react_half(s);
  detail::upwind(s.n1, s.u1_face, dt, s.h);
  if (!s.u2_face.empty()) detail::upwind(s.n2, s.u2_face, dt, s.h);
  s.cache.diffusion.diffuse(s.n1, s.cache.scratch);
  s.cache.diffusion.diffuse(s.n2, s.cache.scratch);
  detail::react_half(s);
  s.t += dt;
  bool ok = true;
  for (std::size_t j = 0; j < s.cells(); ++j) ok &= (s.n1[j] >= 0.0) & (s.n2[j] >= 0.0) & (s.n1[j] + s.n2[j] < HUGE_VAL);
  if (ok) return;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    if (!std::isfinite(s.n1[j]) || !std::isfinite(s.n2[j]) || s.n1[j] < 0.0 || s.n2[j] < 0.0)
      throw NonFiniteState("density became negative or non-finite at x = " +
                           std::to_string(s.x[j]) + ", t = " + std::to_string(s.t));
  }
}

inline SimState step(SimState s, double dt) {
  advance(s, dt);
  return s;
}

struct Diagnostics {
  double t = 0.0;
  double mass1 = 0.0, mass2 = 0.0, total = 0.0;
  double com = 0.0;     ///< center of mass of n1 + n2, unwrapped around the anchor
  double spread = 0.0;  ///< standard deviation about com
  std::vector<double> r1, r2;  ///< -eps ln n_i (empty unless requested)
  double argmin_r = 0.0;       ///< location of min(r1, r2)
  double window_half_width = 0.0;
  double outside_fraction = 0.0;  ///< share of mass farther than the half-width from com
};

struct DiagnosticOptions {
  bool fields = true;
  std::optional<double> v_bar{};  ///< sets the window half-width to 3 max(1, |v_bar| t)
  std::optional<double> window_half_width{};
};

/// Mass-weighted fraction of n1 + n2 farther than `half_width` from `center`.
inline double outside_fraction(const SimState& s, double center, double half_width) {
  double out = 0.0, all = 0.0;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double m = s.n1[j] + s.n2[j];
    all += m;
    if (std::abs(s.wrap(s.x[j] - center)) > half_width) out += m;
  }
  return all > 0.0 ? out / all : 0.0;
}

inline Diagnostics diagnostics(const SimState& s, const DiagnosticOptions& opt = {}) {
  Diagnostics d;
  d.t = s.t;
  double m1 = 0.0, m2 = 0.0, first = 0.0;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    m1 += s.n1[j];
    m2 += s.n2[j];
    first += (s.n1[j] + s.n2[j]) * (s.anchor + s.wrap(s.x[j] - s.anchor));
  }
  d.mass1 = m1 * s.h;
  d.mass2 = m2 * s.h;
  d.total = d.mass1 + d.mass2;
  const double sum = m1 + m2;
  d.com = sum > 0.0 ? first / sum : s.anchor;
  double second = 0.0;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double dx = s.wrap(s.x[j] - d.com);
    second += (s.n1[j] + s.n2[j]) * dx * dx;
  }
  d.spread = sum > 0.0 ? std::sqrt(second / sum) : 0.0;

  double best = std::numeric_limits<double>::infinity();
  if (opt.fields) {
    d.r1.resize(s.cells());
    d.r2.resize(s.cells());
  }
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double r1 = -s.epsilon * std::log(s.n1[j]);
    const double r2 = -s.epsilon * std::log(s.n2[j]);
    if (opt.fields) {
      d.r1[j] = r1;
      d.r2[j] = r2;
    }
    const double r = std::min(r1, r2);
    if (r < best) {
      best = r;
      d.argmin_r = s.anchor + s.wrap(s.x[j] - s.anchor);
    }
  }
  if (opt.window_half_width) {
    d.window_half_width = *opt.window_half_width;
  } else {
    const double v = opt.v_bar ? std::abs(*opt.v_bar) : 0.0;
    d.window_half_width = 3.0 * std::max(1.0, v * s.t);
  }
  d.outside_fraction = outside_fraction(s, d.com, d.window_half_width);
  return d;
}

/// Barrier growth rate D for n_i <= exp((-A d + B + D t)/eps): the smallest
/// D making A d - B - D t a subsolution of the log-transformed system away
/// from the bump centers.
inline double envelope_rate(const MotorModel1& model, double A) {
  auto species = [A](const PeriodicField1* psi, const PeriodicField1& gain) {
    double c = A * A + gain.sup_norm();
    if (psi) c += A * psi->derivative(1).sup_norm() + psi->derivative(2).sup_norm();
    return c;
  };
  return std::max(species(&model.psi1, model.nu2),
                  species(model.psi2 ? &*model.psi2 : nullptr, model.nu1));
}

/// max over cells and states of eps ln n_i - (-A d(x) + B + D t); a positive
/// value means the envelope is violated somewhere.  The band of width L/10
/// around the seam is skipped: there the tails arriving from both sides add
/// up, which the line barrier does not account for.
inline double envelope_excess(const SimState& s, double D) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s.cells(); ++j) {
    if (std::abs(s.x[j]) > 0.45 * s.length) continue;
    double d = std::numeric_limits<double>::infinity();
    for (double c : s.bump_centers) d = std::min(d, std::abs(s.wrap(s.x[j] - c)));
    const double bound = -s.A * d + s.B + D * s.t;
    for (double n : {s.n1[j], s.n2[j]}) {
      if (n <= 0.0) continue;
      worst = std::max(worst, s.epsilon * std::log(n) - bound);
    }
  }
  return worst;
}

struct RunOptions {
  DiagnosticOptions diag{.fields = false};
  /// largest share of mass tolerated in the band of width L/10 opposite com
  double seam_tolerance = 1e-6;
};

using SnapshotObserver = std::function<void(const SimState&, const Diagnostics&)>;

/// Advances to time T with step dt (the last step is shortened to land on T),
/// recording diagnostics at t = 0, every `snapshot_every` steps, and at T.
inline std::vector<Diagnostics> run(SimState& s, double T, double dt, std::size_t snapshot_every,
                                    const RunOptions& opt = {},
                                    const SnapshotObserver& observer = {}) {
  if (!(T >= 0.0)) throw ValidationError("final time must be nonnegative");
  if (snapshot_every == 0) throw ValidationError("snapshot interval must be positive");
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  const double dt_max = max_stable_dt(s);
  if (dt > dt_max * (1.0 + 1e-12))
    throw CflViolation("time step exceeds upwind limit " + std::to_string(dt_max), dt_max);

  std::vector<Diagnostics> out;
  auto snap = [&] {
    Diagnostics d = diagnostics(s, opt.diag);
    s.anchor = d.com;
    const double seam_share = outside_fraction(s, d.com, 0.45 * s.length);
    if (seam_share > opt.seam_tolerance)
      throw DomainTooSmall("mass near the torus seam (" + std::to_string(seam_share) +
                           ") exceeds tolerance; enlarge the domain");
    if (observer) observer(s, d);
    out.push_back(std::move(d));
  };
  snap();
  const double t_end = s.t + T;
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double this_dt = (k == steps) ? t_end - s.t : dt;
    if (this_dt > 0.0) advance(s, this_dt);
    if (k == steps) s.t = t_end;
    if (k % snapshot_every == 0 || k == steps) snap();
  }
  return out;
}

/// One row per cell: x, n1, n2, r1, r2.
inline std::string snapshot_csv(const SimState& s) {
  std::ostringstream os;
  os << "x,n1,n2,r1,r2\n";
  for (std::size_t j = 0; j < s.cells(); ++j) {
    os << io::num(s.x[j]) << ',' << io::num(s.n1[j]) << ',' << io::num(s.n2[j]) << ','
       << io::num(-s.epsilon * std::log(s.n1[j])) << ',' << io::num(-s.epsilon * std::log(s.n2[j]))
       << '\n';
  }
  return os.str();
}

inline nlohmann::json diagnostics_json(const Diagnostics& d) {
  return {{"t", d.t},           {"mass1", d.mass1},
          {"mass2", d.mass2},   {"total", d.total},
          {"com", d.com},       {"spread", d.spread},
          {"argmin_r", d.argmin_r}, {"window_half_width", d.window_half_width},
          {"outside_fraction", d.outside_fraction}};
}

/// Run-level manifest describing a series of snapshots.
inline nlohmann::json run_manifest(const SimState& s, double dt, const std::vector<Diagnostics>& series,
                                   const std::vector<std::string>& snapshot_files = {}) {
  nlohmann::json j;
  j["model"] = s.model_name;
  j["model_fingerprint"] = io::hex64(s.model_fingerprint);
  j["epsilon"] = s.epsilon;
  j["h"] = s.h;
  j["dt"] = dt;
  j["periods"] = s.periods;
  j["cells_per_period"] = s.cells_per_period;
  j["x_left"] = s.x_left;
  j["A"] = s.A;
  j["B"] = s.B;
  j["bump_centers"] = s.bump_centers;
  j["initial_mass"] = s.initial_mass;
  double drift = 0.0;
  for (const auto& d : series)
    drift = std::max(drift, std::abs(d.total - s.initial_mass) / s.initial_mass);
  j["max_relative_mass_drift"] = drift;
  j["mass_conserved"] = drift <= 1e-11;
  j["diagnostics"] = nlohmann::json::array();
  for (const auto& d : series) j["diagnostics"].push_back(diagnostics_json(d));
  if (!snapshot_files.empty()) j["snapshots"] = snapshot_files;
  return j;
}

}  // namespace homog
