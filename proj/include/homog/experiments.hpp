#pragma once

// End-to-end checks tying the cell problem to the simulator: transport velocity,
// several bumps, rate-function profile, and the empirical Harnack constant.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "homog/effective.hpp"
#include "homog/errors.hpp"
#include "homog/fokker_planck.hpp"
#include "homog/io.hpp"
#include "homog/motor_model.hpp"

namespace homog {

struct SimOptions {
  std::size_t cells_per_period = 64;
  double A = 2.0;
  double cfl = 0.5;           ///< dt as a fraction of the upwind limit
  std::size_t snapshots = 40;  ///< recorded snapshots per run, besides t = 0
  std::size_t n = 128;         ///< cell-problem grid used for v_bar
  EigenOptions eigen{};
};

/// Torus large enough to hold the diffusive spread, the drift and the
/// diagnostic window of half-width 3 max(1, |v_bar| T) around every center.
inline DomainSpec simulation_domain(double epsilon, double T, double v_bar,
                                    const std::vector<double>& centers, std::size_t cells_per_period) {
  double reach = 0.0;
  for (double c : centers) reach = std::max(reach, std::abs(c) + std::abs(v_bar) * T);
  const double half = reach + std::max(3.0 * std::max(1.0, std::abs(v_bar) * T),
                                       7.0 * std::sqrt(2.0 * epsilon * T)) +
                      10.0 * epsilon;
  return domain_for(epsilon, half, cells_per_period);
}

/// Time step and snapshot stride for a run of length T.
inline std::pair<double, std::size_t> run_schedule(const SimState& s, double T, const SimOptions& opt) {
  if (!(opt.cfl > 0.0 && opt.cfl <= 1.0)) throw ValidationError("cfl fraction must lie in (0, 1]");
  if (opt.snapshots == 0) throw ValidationError("snapshot count must be positive");
  double dt = opt.cfl * max_stable_dt(s);
  // without drift there is no stability limit; keep the step on the drift scale anyway
  if (!std::isfinite(dt)) dt = opt.cfl * 0.9 * s.h;
  std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt)));
  std::size_t stride = std::max<std::size_t>(1, steps / opt.snapshots);
  // equalize steps so that T lands on a step boundary
  if (T > 0.0) {
    steps = ((steps + stride - 1) / stride) * stride;
    dt = T / static_cast<double>(steps);
  }
  return {dt, stride};
}

/// Least-squares slope of (t, y) over samples with t >= t_from.
inline double fit_slope(const std::vector<std::pair<double, double>>& series, double t_from) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t k = 0;
  for (const auto& [t, y] : series) {
    if (t < t_from) continue;
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++k;
  }
  const double den = static_cast<double>(k) * stt - st * st;
  if (k < 2 || !(den > 0.0)) throw InconclusiveFit("not enough distinct times to fit a slope");
  return (static_cast<double>(k) * sty - st * sy) / den;
}

// ---------------------------------------------------------------------------
// Transport velocity

struct TransportRow {
  double epsilon = 0.0;
  double h = 0.0;
  double dt = 0.0;
  double v_meas = 0.0;
  double error = 0.0;
  double outside_fraction = 0.0;  ///< at T, window half-width 3 max(1, |v_bar| T)
  double spread = 0.0;            ///< at T
  double max_mass_drift = 0.0;    ///< relative, over all snapshots
  double envelope_excess = 0.0;   ///< max over snapshots; <= 0 means the barrier held
  std::vector<std::pair<double, double>> com;  ///< (t, com)
};

struct TransportReport {
  std::string model_name;
  std::uint64_t model_fingerprint = 0;
  double v_bar = 0.0;
  double T = 0.0;
  double envelope_rate = 0.0;
  std::vector<TransportRow> rows;  ///< decreasing epsilon
  bool errors_decrease = false;    ///< up to a noise floor of 2h
  bool accuracy_ok = false;        ///< smallest-eps error within tolerance
  bool envelope_ok = false;
  bool pass = false;
};

/// Relative 10% error, or 0.02 absolute for slow motors.
inline bool velocity_within_tolerance(double error, double v_bar) {
  return std::abs(v_bar) < 0.2 ? error < 0.02 : error < 0.1 * std::abs(v_bar);
}

inline TransportRow transport_run(const MotorModel1& model, double epsilon, double T, double v_bar,
                                  double envelope_D, const SimOptions& opt = {}) {
  const auto dom = simulation_domain(epsilon, T, v_bar, {0.0}, opt.cells_per_period);
  SimState s = init_state(model, epsilon, dom, {Bump{0.0, 1.0}}, opt.A);
  const auto [dt, stride] = run_schedule(s, T, opt);
  TransportRow row;
  row.epsilon = epsilon;
  row.h = s.h;
  row.dt = dt;
  row.envelope_excess = -std::numeric_limits<double>::infinity();
  RunOptions ro;
  ro.diag.v_bar = v_bar;
  auto series = run(s, T, dt, stride, ro, [&](const SimState& st, const Diagnostics& d) {
    row.com.emplace_back(d.t, d.com);
    row.max_mass_drift =
        std::max(row.max_mass_drift, std::abs(d.total - st.initial_mass) / st.initial_mass);
    row.envelope_excess = std::max(row.envelope_excess, envelope_excess(st, envelope_D));
  });
  if (series.size() < 10)
    throw InconclusiveFit("only " + std::to_string(series.size()) +
                          " snapshots recorded; at least 10 are needed");
  row.v_meas = fit_slope(row.com, 0.5 * T);
  row.error = std::abs(row.v_meas - v_bar);
  row.outside_fraction = series.back().outside_fraction;
  row.spread = series.back().spread;
  return row;
}

inline TransportReport transport(const MotorModel1& model, const std::vector<double>& eps_list,
                                 double T, const SimOptions& opt = {}) {
  if (eps_list.empty()) throw ValidationError("epsilon list is empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw ValidationError("epsilon values must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
      throw ValidationError("epsilon list must be strictly decreasing");
  }
  if (!(T > 0.0)) throw ValidationError("final time must be positive");
  TransportReport r;
  r.model_name = model.name;
  r.model_fingerprint = model.fingerprint();
  r.T = T;
  r.v_bar = evaluate_hbar(model, 0.0, opt.n, opt.eigen).dhbar;
  r.envelope_rate = envelope_rate(model, opt.A);
  for (double eps : eps_list) r.rows.push_back(transport_run(model, eps, T, r.v_bar, r.envelope_rate, opt));
  r.errors_decrease = true;
  for (std::size_t k = 1; k < r.rows.size(); ++k)
    if (r.rows[k].error > r.rows[k - 1].error + 2.0 * r.rows[k].h) r.errors_decrease = false;
  r.accuracy_ok = velocity_within_tolerance(r.rows.back().error, r.v_bar);
  r.envelope_ok = true;
  for (const auto& row : r.rows)
    if (row.envelope_excess > 1e-9) r.envelope_ok = false;
  r.pass = r.errors_decrease && r.accuracy_ok;
  return r;
}

// ---------------------------------------------------------------------------
// Several bumps

struct BumpWindow {
  double initial_center = 0.0;
  double center = 0.0;  ///< x_j + T v_bar
  double half_width = 0.0;
  double spread = 0.0;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  double relative_error = 0.0;
};

struct MultimassReport {
  std::string model_name;
  double epsilon = 0.0;
  double T = 0.0;
  double v_bar = 0.0;
  double captured_fraction = 0.0;
  std::vector<BumpWindow> windows;
  bool pass = false;
};

inline MultimassReport multimass(const MotorModel1& model, double epsilon, const std::vector<Bump>& bumps,
                                 double T, const SimOptions& opt = {}) {
  if (!(T > 0.0)) throw ValidationError("final time must be positive");
  if (bumps.empty()) throw InvalidMass("at least one bump is required");
  MultimassReport r;
  r.model_name = model.name;
  r.epsilon = epsilon;
  r.T = T;
  r.v_bar = evaluate_hbar(model, 0.0, opt.n, opt.eigen).dhbar;
  std::vector<Bump> sorted = bumps;
  std::sort(sorted.begin(), sorted.end(), [](const Bump& a, const Bump& b) { return a.center < b.center; });
  const double separation = 4.0 * std::max(1.0, std::abs(r.v_bar)) * T;
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k].center - sorted[k - 1].center < separation)
      throw ValidationError("bump centers must be at least " + std::to_string(separation) + " apart");

  std::vector<double> centers;
  for (const auto& b : sorted) centers.push_back(b.center);
  const auto dom = simulation_domain(epsilon, T, r.v_bar, centers, opt.cells_per_period);
  SimState s = init_state(model, epsilon, dom, sorted, opt.A);
  const auto [dt, stride] = run_schedule(s, T, opt);
  RunOptions ro;
  run(s, T, dt, stride, ro);

  // each bump owns the cells closer to its predicted center than to any other
  const std::size_t nb = sorted.size();
  std::vector<double> m0(nb, 0.0), m1(nb, 0.0), m2(nb, 0.0);
  auto owner = [&](double x) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nb; ++k) {
      const double d = std::abs(s.wrap(x - (sorted[k].center + T * r.v_bar)));
      if (d < bd) bd = d, best = k;
    }
    return best;
  };
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const std::size_t k = owner(s.x[j]);
    const double c = sorted[k].center + T * r.v_bar;
    const double dx = s.wrap(s.x[j] - c);
    const double m = (s.n1[j] + s.n2[j]) * s.h;
    m0[k] += m;
    m1[k] += m * dx;
    m2[k] += m * dx * dx;
  }
  for (std::size_t k = 0; k < nb; ++k) {
    BumpWindow w;
    w.initial_center = sorted[k].center;
    w.center = sorted[k].center + T * r.v_bar;
    const double mean = m0[k] > 0.0 ? m1[k] / m0[k] : 0.0;
    w.spread = m0[k] > 0.0 ? std::sqrt(std::max(0.0, m2[k] / m0[k] - mean * mean)) : 0.0;
    w.half_width = 5.0 * w.spread;
    w.initial_mass = sorted[k].mass;
    r.windows.push_back(w);
  }
  for (std::size_t k = 1; k < nb; ++k) {
    if (r.windows[k].center - r.windows[k].half_width <
        r.windows[k - 1].center + r.windows[k - 1].half_width)
      throw WindowOverlap("windows around bumps " + std::to_string(k - 1) + " and " +
                          std::to_string(k) + " intersect");
  }
  double captured = 0.0;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double m = (s.n1[j] + s.n2[j]) * s.h;
    for (auto& w : r.windows) {
      if (std::abs(s.wrap(s.x[j] - w.center)) <= w.half_width) {
        w.final_mass += m;
        captured += m;
        break;
      }
    }
  }
  const double total = s.total_mass();
  r.captured_fraction = captured / total;
  r.pass = r.captured_fraction >= 1.0 - 1e-3;
  double initial_total = 0.0;
  for (const auto& b : sorted) initial_total += b.mass;
  for (auto& w : r.windows) {
    const double expected = w.initial_mass / initial_total * total;
    w.relative_error = expected > 0.0 ? std::abs(w.final_mass - expected) / expected : w.final_mass;
    if (w.relative_error > 0.05) r.pass = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rate-function profile against the Hopf-Lax solution

struct ProfileReport {
  std::string model_name;
  double epsilon = 0.0;
  double t = 0.0;
  double h = 0.0;
  double v_bar = 0.0;
  double window = 0.0;  ///< half-width of the comparison window around t v_bar
  std::vector<double> x;          ///< comparison points
  std::vector<double> r_shifted;  ///< min_i(-eps ln n_i) minus its minimum, at x
  std::vector<double> hopf_lax;   ///< t H*(x / t)
  double sup_gap = 0.0;
  double argmin = 0.0;
  double argmin_distance = 0.0;
  double argmin_tolerance = 0.0;  ///< 5h + 2 eps
  bool pass = false;
  std::vector<double> fine_x, fine_r;  ///< full simulated profile inside the window
};

struct ProfileOptions {
  SimOptions sim{};
  double window = 1.0;
  std::size_t points = 41;
};

inline ProfileReport profile_compare(const MotorModel1& model, double epsilon, double t_eval,
                                     const ProfileOptions& opt = {}) {
  if (!(t_eval > 0.0)) throw ValidationError("evaluation time must be positive");
  if (!(opt.window > 0.0) || opt.points < 2) throw ValidationError("invalid comparison window");
  ProfileReport r;
  r.model_name = model.name;
  r.epsilon = epsilon;
  r.t = t_eval;
  r.window = opt.window;
  r.v_bar = evaluate_hbar(model, 0.0, opt.sim.n, opt.sim.eigen).dhbar;
  const auto dom = simulation_domain(epsilon, t_eval, r.v_bar, {0.0}, opt.sim.cells_per_period);
  SimState s = init_state(model, epsilon, dom, {Bump{0.0, 1.0}}, opt.sim.A);
  r.h = s.h;
  const auto [dt, stride] = run_schedule(s, t_eval, opt.sim);
  run(s, t_eval, dt, stride);

  std::vector<double> rate(s.cells());
  double rmin = std::numeric_limits<double>::infinity();
  std::size_t jmin = 0;
  for (std::size_t j = 0; j < s.cells(); ++j) {
    rate[j] = -epsilon * std::log(std::max(s.n1[j], s.n2[j]));
    if (rate[j] < rmin) rmin = rate[j], jmin = j;
  }
  for (double& v : rate) v -= rmin;
  const double center = t_eval * r.v_bar;
  r.argmin = s.x[jmin];
  r.argmin_distance = std::abs(s.wrap(r.argmin - center));
  r.argmin_tolerance = 5.0 * s.h + 2.0 * epsilon;

  auto sample = [&](double x) {
    const double u = (x - s.x_left) / s.h;
    const double fl = std::floor(u);
    const auto n = static_cast<long long>(s.cells());
    auto idx = [&](long long i) { return static_cast<std::size_t>(((i % n) + n) % n); };
    const double w = u - fl;
    const auto i0 = static_cast<long long>(fl);
    return (1.0 - w) * rate[idx(i0)] + w * rate[idx(i0 + 1)];
  };
  for (std::size_t k = 0; k < opt.points; ++k) {
    const double x = center - opt.window +
                     2.0 * opt.window * static_cast<double>(k) / static_cast<double>(opt.points - 1);
    r.x.push_back(x);
    r.r_shifted.push_back(sample(x));
  }
  r.hopf_lax = hopf_lax_profile(model, t_eval, r.x, opt.sim.n);
  for (std::size_t k = 0; k < r.x.size(); ++k)
    r.sup_gap = std::max(r.sup_gap, std::abs(r.r_shifted[k] - r.hopf_lax[k]));
  for (std::size_t j = 0; j < s.cells(); ++j) {
    if (std::abs(s.wrap(s.x[j] - center)) <= opt.window) {
      r.fine_x.push_back(center + s.wrap(s.x[j] - center));
      r.fine_r.push_back(rate[j]);
    }
  }
  r.pass = r.argmin_distance <= r.argmin_tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// Empirical Harnack constant

/// max over i, j and cells |z - z'| <= eps with |z - com| <= window of
/// (R_j(z', t1) - R_i(z, t0)) / eps, for snapshots taken eps apart.
inline double harnack_constant(const SimState& early, const SimState& late, double window = 1.0) {
  const double eps = early.epsilon;
  if (late.epsilon != eps || late.cells() != early.cells() || late.h != early.h)
    throw SnapshotMissing("snapshots do not share a grid");
  if (std::abs((late.t - early.t) - eps) > 1e-9 * std::max(1.0, late.t))
    throw SnapshotMissing("need snapshots at t0 and t0 + eps; got t = " + std::to_string(early.t) +
                          " and " + std::to_string(late.t));
  const double com = diagnostics(early, {.fields = false}).com;
  const std::size_t n = early.cells();
  const auto reach = static_cast<long long>(std::floor(eps / early.h + 1e-9));
  std::vector<double> r0(n), r1(n);
  for (std::size_t j = 0; j < n; ++j) {
    r0[j] = -eps * std::log(std::max(early.n1[j], early.n2[j]));  // min over i of R_i
    r1[j] = -eps * std::log(std::min(late.n1[j], late.n2[j]));    // max over j of R_j
  }
  double best = -std::numeric_limits<double>::infinity();
  const auto nn = static_cast<long long>(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(early.wrap(early.x[j] - com)) > window) continue;
    if (!std::isfinite(r0[j])) continue;
    for (long long k = -reach; k <= reach; ++k) {
      const auto jj = static_cast<std::size_t>(((static_cast<long long>(j) + k) % nn + nn) % nn);
      best = std::max(best, (r1[jj] - r0[j]) / eps);
    }
  }
  return best;
}

struct HarnackReport {
  std::string model_name;
  double epsilon = 0.0;
  double t0 = 0.0;
  double delta = 0.0;
  double c_hat = 0.0;
};

inline HarnackReport harnack_diag(const MotorModel1& model, double epsilon, double t0, double delta,
                                  const SimOptions& opt = {}) {
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  if (!(t0 >= epsilon * delta)) throw ValidationError("t0 must be at least eps * delta");
  const double v_bar = evaluate_hbar(model, 0.0, opt.n, opt.eigen).dhbar;
  const auto dom = simulation_domain(epsilon, t0 + epsilon, v_bar, {0.0}, opt.cells_per_period);
  SimState s = init_state(model, epsilon, dom, {Bump{0.0, 1.0}}, opt.A);
  SimOptions o = opt;
  const auto [dt0, stride0] = run_schedule(s, t0, o);
  run(s, t0, dt0, stride0);
  SimState early = s;
  const auto [dt1, stride1] = run_schedule(s, epsilon, o);
  run(s, epsilon, dt1, stride1);
  HarnackReport r;
  r.model_name = model.name;
  r.epsilon = epsilon;
  r.t0 = t0;
  r.delta = delta;
  r.c_hat = harnack_constant(early, s);
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const TransportReport& r) {
  nlohmann::json j{{"experiment", "transport"},
                   {"model", r.model_name},
                   {"model_fingerprint", io::hex64(r.model_fingerprint)},
                   {"v_bar", r.v_bar},
                   {"T", r.T},
                   {"envelope_rate", r.envelope_rate},
                   {"errors_decrease", r.errors_decrease},
                   {"accuracy_ok", r.accuracy_ok},
                   {"envelope_ok", r.envelope_ok},
                   {"pass", r.pass}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"epsilon", row.epsilon},
                         {"h", row.h},
                         {"dt", row.dt},
                         {"v_meas", row.v_meas},
                         {"error", row.error},
                         {"outside_fraction", row.outside_fraction},
                         {"spread", row.spread},
                         {"max_mass_drift", row.max_mass_drift},
                         {"envelope_excess", row.envelope_excess}});
  return j;
}

inline nlohmann::json to_json(const MultimassReport& r) {
  nlohmann::json j{{"experiment", "multimass"}, {"model", r.model_name}, {"epsilon", r.epsilon},
                   {"T", r.T}, {"v_bar", r.v_bar}, {"captured_fraction", r.captured_fraction},
                   {"pass", r.pass}};
  j["windows"] = nlohmann::json::array();
  for (const auto& w : r.windows)
    j["windows"].push_back({{"initial_center", w.initial_center},
                            {"center", w.center},
                            {"half_width", w.half_width},
                            {"spread", w.spread},
                            {"initial_mass", w.initial_mass},
                            {"final_mass", w.final_mass},
                            {"relative_error", w.relative_error}});
  return j;
}

inline nlohmann::json to_json(const ProfileReport& r) {
  return {{"experiment", "profile"},
          {"model", r.model_name},
          {"epsilon", r.epsilon},
          {"t", r.t},
          {"h", r.h},
          {"v_bar", r.v_bar},
          {"window", r.window},
          {"x", r.x},
          {"r_shifted", r.r_shifted},
          {"hopf_lax", r.hopf_lax},
          {"sup_gap", r.sup_gap},
          {"argmin", r.argmin},
          {"argmin_distance", r.argmin_distance},
          {"argmin_tolerance", r.argmin_tolerance},
          {"pass", r.pass}};
}

inline nlohmann::json to_json(const HarnackReport& r) {
  return {{"experiment", "harnack"}, {"model", r.model_name}, {"epsilon", r.epsilon},
          {"t0", r.t0},             {"delta", r.delta},       {"c_hat", r.c_hat}};
}

inline std::string to_text(const TransportReport& r) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "transport  model=%s  v_bar=%.6g  T=%g\n", r.model_name.c_str(),
                r.v_bar, r.T);
  os << buf;
  os << "  epsilon        h             v_meas        error         outside       envelope\n";
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "  %-14.6g %-13.4e %-13.6g %-13.4e %-13.4e %-13.4e\n", row.epsilon,
                  row.h, row.v_meas, row.error, row.outside_fraction, row.envelope_excess);
    os << buf;
  }
  os << "  errors decrease: " << (r.errors_decrease ? "yes" : "no")
     << "  accuracy: " << (r.accuracy_ok ? "ok" : "FAIL")
     << "  envelope: " << (r.envelope_ok ? "ok" : "violated") << "  verdict: " << (r.pass ? "PASS" : "FAIL")
     << '\n';
  return os.str();
}

inline std::string to_text(const MultimassReport& r) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "multimass  model=%s  eps=%g  T=%g  v_bar=%.6g  captured=%.6f\n",
                r.model_name.c_str(), r.epsilon, r.T, r.v_bar, r.captured_fraction);
  os << buf;
  os << "  center        half_width    initial       final         rel_error\n";
  for (const auto& w : r.windows) {
    std::snprintf(buf, sizeof buf, "  %-13.6g %-13.6g %-13.6g %-13.6g %-13.4e\n", w.center, w.half_width,
                  w.initial_mass, w.final_mass, w.relative_error);
    os << buf;
  }
  os << "  verdict: " << (r.pass ? "PASS" : "FAIL") << '\n';
  return os.str();
}

inline std::string to_text(const ProfileReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "profile  model=%s  eps=%g  t=%g\n  sup gap %.6g on |x - t v_bar| <= %g\n"
                "  argmin %.6g  target %.6g  distance %.3e  tolerance %.3e\n  verdict: %s\n",
                r.model_name.c_str(), r.epsilon, r.t, r.sup_gap, r.window, r.argmin, r.t * r.v_bar,
                r.argmin_distance, r.argmin_tolerance, r.pass ? "PASS" : "FAIL");
  return buf;
}

inline std::string to_text(const HarnackReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "harnack  model=%s  eps=%g  t0=%g  delta=%g  C_hat=%.6g\n",
                r.model_name.c_str(), r.epsilon, r.t0, r.delta, r.c_hat);
  return buf;
}

/// Two whitespace-separated columns, one pair per line.
inline std::string two_columns(const std::vector<double>& a, const std::vector<double>& b) {
  std::ostringstream os;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) os << io::num(a[k]) << ' ' << io::num(b[k]) << '\n';
  return os.str();
}

inline std::string two_columns(const std::vector<std::pair<double, double>>& ab) {
  std::ostringstream os;
  for (const auto& [a, b] : ab) os << io::num(a) << ' ' << io::num(b) << '\n';
  return os.str();
}

}  // namespace homog
