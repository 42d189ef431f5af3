#pragma once

// The effective Hamiltonian as a function of momentum (one space dimension):
// tabulation, structural certificates, convex conjugate, transport velocity,
// and the point-source Hopf-Lax profile t * H*(x / t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homog/cell.hpp"
#include "homog/errors.hpp"
#include "homog/io.hpp"
#include "homog/motor_model.hpp"

namespace homog {

struct HbarTable {
  std::vector<double> p;
  std::vector<double> hbar;
  std::vector<double> dhbar;
  std::uint64_t fingerprint = 0;
  std::string model_name;
  std::size_t n = 0;
  double tol = 0.0;

  std::size_t size() const { return p.size(); }
};

namespace detail {

template <class F>
auto annotate_p(double p, F&& f) -> decltype(f()) {
  const std::string where = " (at p = " + io::num(p) + ")";
  try {
    return f();
  } catch (const PecletViolation& e) {
    throw PecletViolation(e.what() + where, e.n_required());
  } catch (const NoConvergence& e) {
    throw NoConvergence(e.what() + where, e.iterations());
  } catch (const SolverError& e) {
    throw SolverError(e.what() + where);
  }
}

}  // namespace detail

/// Hbar and its gradient at one momentum.
struct HbarPoint {
  double hbar = 0.0;
  double dhbar = 0.0;
};

inline HbarPoint evaluate_hbar(const MotorModel1& model, double p, std::size_t n,
                               const EigenOptions& opt = {}) {
  return detail::annotate_p(p, [&] {
    const auto sol = solve_cell(model, p, n, opt);
    return HbarPoint{sol.hbar, dhbar(sol, model)[0]};
  });
}

/// Uniformly spaced table of (Hbar, DHbar) over [p_min, p_max].
inline HbarTable sweep(const MotorModel1& model, double p_min, double p_max, std::size_t count,
                       std::size_t n = 128, const EigenOptions& opt = {}) {
  if (count < 3) throw ValidationError("sweep needs at least 3 momenta");
  if (!(p_min < p_max)) throw ValidationError("sweep needs p_min < p_max");
  HbarTable t;
  t.fingerprint = model.fingerprint();
  t.model_name = model.name;
  t.n = n;
  t.tol = opt.tol;
  for (std::size_t i = 0; i < count; ++i) {
    // exact endpoints; symmetric ranges put p = 0 exactly on the grid
    const double frac = static_cast<double>(i) / static_cast<double>(count - 1);
    double p = p_min + (p_max - p_min) * frac;
    if (2 * i + 1 == count && p_min == -p_max) p = 0.0;
    const auto hp = evaluate_hbar(model, p, n, opt);
    t.p.push_back(p);
    t.hbar.push_back(hp.hbar);
    t.dhbar.push_back(hp.dhbar);
  }
  return t;
}

struct ConvexityViolation {
  std::size_t left, mid, right;
  double margin;
};

struct ConvexityReport {
  bool pass = false;
  double min_margin = 0.0;
  std::size_t pairs_checked = 0;
  std::vector<ConvexityViolation> violations;
};

/// Midpoint test  Hbar((p_i + p_j)/2) < (Hbar(p_i) + Hbar(p_j))/2  for every
/// pair whose midpoint is itself a table node.
inline ConvexityReport check_convexity(const HbarTable& table) {
  ConvexityReport r;
  const std::size_t m = table.size();
  if (m < 3) throw ValidationError("convexity check needs at least 3 table entries");
  const double span = table.p.back() - table.p.front();
  r.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (std::abs(table.p[j] - table.p[i]) <= 1e-10) continue;
      const double mid_p = 0.5 * (table.p[i] + table.p[j]);
      // nodes are sorted; locate the midpoint node if there is one
      const auto it = std::lower_bound(table.p.begin(), table.p.end(), mid_p - 1e-12 * span);
      if (it == table.p.end() || std::abs(*it - mid_p) > 1e-12 * std::max(1.0, span)) continue;
      const auto k = static_cast<std::size_t>(it - table.p.begin());
      const double margin = 0.5 * (table.hbar[i] + table.hbar[j]) - table.hbar[k];
      ++r.pairs_checked;
      r.min_margin = std::min(r.min_margin, margin);
      if (!(margin > 0.0)) r.violations.push_back({i, k, j, margin});
    }
  }
  r.pass = r.pairs_checked > 0 && r.violations.empty();
  return r;
}

/// Constant C(p) in Hbar(p) >= |p|^2 - C(p), from the maximum-principle bound
/// applied at the maximum of each corrector.
inline double coercivity_constant(const MotorModel1& model, double p) {
  const double ap = std::abs(p);
  auto branch = [ap](const PeriodicField1* psi, const PeriodicField1& leave) {
    double c = leave.sup_norm();
    if (psi) c += psi->derivative(2).sup_norm() + ap * psi->derivative(1).sup_norm();
    return c;
  };
  const double c1 = branch(&model.psi1, model.nu1);
  const double c2 = branch(model.psi2 ? &*model.psi2 : nullptr, model.nu2);
  return std::max(c1, c2);
}

struct CoercivityReport {
  bool pass = false;
  double min_slack = 0.0;
  std::vector<double> constant;  ///< C(p_i)
  std::vector<double> slack;     ///< Hbar(p_i) - (p_i^2 - C(p_i))
  std::vector<std::size_t> violations;
};

inline CoercivityReport coercivity_check(const MotorModel1& model, const HbarTable& table) {
  CoercivityReport r;
  r.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double c = coercivity_constant(model, table.p[i]);
    const double s = table.hbar[i] - (table.p[i] * table.p[i] - c);
    r.constant.push_back(c);
    r.slack.push_back(s);
    r.min_slack = std::min(r.min_slack, s);
    if (!(s >= 0.0)) r.violations.push_back(i);
  }
  r.pass = r.violations.empty() && table.size() > 0;
  return r;
}

struct LegendreOptions {
  std::size_t n = 128;
  double gradient_tol = 1e-8;  ///< stop when |q - DHbar(p)| is below this
  double p_cap = 50.0;         ///< largest |p| the bracket may reach
  std::size_t max_iterations = 200;
  EigenOptions eigen{};
};

struct LegendreResult {
  double value = 0.0;      ///< H*(q)
  double maximizer = 0.0;  ///< p with DHbar(p) = q
  std::size_t evaluations = 0;
};

/// H*(q) = sup_p (q p - Hbar(p)).  The concave objective's stationarity
/// condition DHbar(p) = q is solved by secant steps on the monotone gradient,
/// kept inside a sign-change bracket and replaced by bisection whenever a
/// step would leave it.
inline LegendreResult legendre_detail(const MotorModel1& model, double q,
                                      const LegendreOptions& opt = {}) {
  if (!std::isfinite(q)) throw ValidationError("Legendre query must be finite");
  LegendreResult res;
  auto eval = [&](double p) {
    ++res.evaluations;
    return evaluate_hbar(model, p, opt.n, opt.eigen);
  };
  auto finish = [&](double p, const HbarPoint& hp) {
    res.maximizer = p;
    res.value = q * p - hp.hbar;
    return res;
  };

  HbarPoint f0 = eval(0.0);
  if (std::abs(f0.dhbar - q) < opt.gradient_tol) return finish(0.0, f0);

  // bracket radius from Hbar(p) >= p^2 - C: the maximizer satisfies
  // |p| <= (|q| + |D psi|_inf) / 2 up to a margin
  double dpsi = model.psi1.derivative(1).sup_norm();
  if (model.psi2) dpsi = std::max(dpsi, model.psi2->derivative(1).sup_norm());
  double radius = 0.5 * (std::abs(q) + dpsi) + 1.0;
  const double dir = (f0.dhbar < q) ? 1.0 : -1.0;
  double a = 0.0, b = 0.0;
  HbarPoint fa = f0, fb{};
  for (;;) {
    radius = std::min(radius, opt.p_cap);
    b = dir * radius;
    fb = eval(b);
    if ((fb.dhbar - q) * dir > 0.0) break;
    if (std::abs(fb.dhbar - q) < opt.gradient_tol) return finish(b, fb);
    if (radius >= opt.p_cap) {
      throw BracketFailure("no sign change of DHbar - q within |p| <= " + io::num(opt.p_cap));
    }
    a = b;
    fa = fb;
    radius *= 2.0;
  }
  // keep lo/hi ordered with g(lo) < 0 < g(hi), g = DHbar - q
  double lo = a, hi = b;
  HbarPoint flo = fa, fhi = fb;
  if (lo > hi) {
    std::swap(lo, hi);
    std::swap(flo, fhi);
  }
  double x_prev = lo, g_prev = flo.dhbar - q;
  double x = hi, g = fhi.dhbar - q;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    double next = (g != g_prev) ? x - g * (x - x_prev) / (g - g_prev) : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const HbarPoint fn = eval(next);
    const double gn = fn.dhbar - q;
    if (std::abs(gn) < opt.gradient_tol) return finish(next, fn);
    if (gn < 0.0) {
      lo = next;
    } else {
      hi = next;
    }
    x_prev = x;
    g_prev = g;
    x = next;
    g = gn;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) return finish(next, fn);
  }
  throw NoConvergence("Legendre transform did not converge", opt.max_iterations);
}

inline double legendre(const MotorModel1& model, double q, std::size_t n = 128) {
  LegendreOptions opt;
  opt.n = n;
  return legendre_detail(model, q, opt).value;
}

struct VelocityReport {
  double v_bar = 0.0;
  double hstar_at_vbar = 0.0;
  double coercivity_constant = 0.0;
};

/// Transport velocity DHbar(0) with H*(DHbar(0)) as a self-check.
inline VelocityReport velocity(const MotorModel1& model, std::size_t n = 128,
                               const EigenOptions& eig = {}) {
  VelocityReport r;
  r.v_bar = evaluate_hbar(model, 0.0, n, eig).dhbar;
  LegendreOptions opt;
  opt.n = n;
  opt.eigen = eig;
  r.hstar_at_vbar = legendre_detail(model, r.v_bar, opt).value;
  r.coercivity_constant = coercivity_constant(model, 0.0);
  return r;
}

/// R(x, t) = t H*(x / t): the rate function for mass started at the origin.
inline std::vector<double> hopf_lax_profile(const MotorModel1& model, double t,
                                            const std::vector<double>& x_grid,
                                            std::size_t n = 128) {
  if (!(t > 0.0)) throw ValidationError("Hopf-Lax profile needs t > 0");
  std::vector<double> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) out.push_back(t * legendre(model, x / t, n));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: CSV (p, hbar, dhbar) plus a JSON sidecar.

inline std::string table_csv(const HbarTable& t) {
  std::ostringstream os;
  os << "p,hbar,dhbar\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    os << io::num(t.p[i]) << ',' << io::num(t.hbar[i]) << ',' << io::num(t.dhbar[i]) << '\n';
  return os.str();
}

inline nlohmann::json table_sidecar(const HbarTable& t) {
  return {{"model", t.model_name},
          {"fingerprint", io::hex64(t.fingerprint)},
          {"N", t.n},
          {"eigen_tol", t.tol},
          {"count", t.size()},
          {"columns", {"p", "hbar", "dhbar"}}};
}

inline void write_table(const HbarTable& t, const std::filesystem::path& csv_path) {
  io::atomic_write(csv_path, table_csv(t));
  auto side = csv_path;
  side.replace_extension(".json");
  io::atomic_write(side, table_sidecar(t).dump(2) + "\n");
}

inline HbarTable read_table(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot read table '" + csv_path.string() + "'");
  HbarTable t;
  std::string line;
  std::getline(in, line);
  if (detail::trim(line) != "p,hbar,dhbar")
    throw ValidationError("table '" + csv_path.string() + "' lacks the p,hbar,dhbar header");
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    t.p.push_back(detail::parse_number(a, "p"));
    t.hbar.push_back(detail::parse_number(b, "hbar"));
    t.dhbar.push_back(detail::parse_number(c, "dhbar"));
  }
  auto side = csv_path;
  side.replace_extension(".json");
  if (std::ifstream js(side); js) {
    const auto j = nlohmann::json::parse(js);
    t.model_name = j.value("model", "");
    t.n = j.value("N", std::size_t{0});
    t.tol = j.value("eigen_tol", 0.0);
    t.fingerprint = std::stoull(j.value("fingerprint", std::string("0")), nullptr, 16);
  }
  return t;
}

}  // namespace homog
