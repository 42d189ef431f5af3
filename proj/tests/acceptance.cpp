// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "homog/experiments.hpp"

using namespace homog;

namespace {

const std::vector<std::string> kPresets = {"flat", "symmetric", "asymmetric-ratchet"};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome hbar_at_zero() {
  double worst = 0.0;
  for (const auto& name : kPresets) worst = std::max(worst, std::abs(solve_cell(preset(name), 0.0, 128).hbar));
  return {worst < 1e-8, fmt("max |Hbar(0)| = %.3e (< 1e-8)", worst)};
}

Outcome flat_analytic() {
  const auto t = sweep(preset("flat"), -2.0, 2.0, 41, 128);
  double eh = 0.0, ed = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    eh = std::max(eh, std::abs(t.hbar[i] - t.p[i] * t.p[i]));
    ed = std::max(ed, std::abs(t.dhbar[i] - 2 * t.p[i]));
  }
  return {eh < 1e-6 && ed < 1e-6, fmt("max |Hbar - p^2| = %.3e, max |DHbar - 2p| = %.3e (< 1e-6)", eh, ed)};
}

Outcome gradient_formula() {
  const auto m = preset("asymmetric-ratchet");
  const double d = 1e-4;
  double worst = 0.0;
  for (int k = 0; k < 21; ++k) {
    const double p = -2.0 + 0.2 * k;
    const double fd = (solve_cell(m, p + d, 128).hbar - solve_cell(m, p - d, 128).hbar) / (2 * d);
    worst = std::max(worst, std::abs(evaluate_hbar(m, p, 128).dhbar - fd));
  }
  return {worst < 1e-4, fmt("max |dhbar - FD| = %.3e over 21 momenta (< 1e-4)", worst)};
}

Outcome certificates() {
  bool ok = true;
  std::string d;
  for (const auto& name : kPresets) {
    const auto m = preset(name);
    const auto t = sweep(m, -2.0, 2.0, 41, 128);
    const auto cv = check_convexity(t);
    const auto co = coercivity_check(m, t);
    ok = ok && cv.pass && cv.min_margin > 0.0 && co.pass;
    d += fmt("%s: margin %.3e slack %.3e; ", name.c_str(), cv.min_margin, co.min_slack);
  }
  return {ok, d};
}

Outcome adjoint_constant() {
  double worst = 0.0;
  for (const auto& name : kPresets) {
    const auto sol = solve_cell(preset(name), 0.0, 128);
    double mean = 0.0;
    for (double v : sol.w1_adj) mean += v;
    for (double v : sol.w2_adj) mean += v;
    mean /= static_cast<double>(2 * sol.w1_adj.size());
    for (double v : sol.w1_adj) worst = std::max(worst, std::abs(v / mean - 1));
    for (double v : sol.w2_adj) worst = std::max(worst, std::abs(v / mean - 1));
  }
  return {worst < 1e-8, fmt("max adjoint deviation from constant = %.3e (< 1e-8)", worst)};
}

Outcome legendre_consistency() {
  bool ok = true;
  double worst_zero = 0.0, worst_fenchel = 0.0, least_side = 1e300;
  for (const auto& name : kPresets) {
    const auto m = preset(name);
    const double vb = velocity(m).v_bar;
    worst_zero = std::max(worst_zero, std::abs(legendre(m, vb)));
    for (double q : {vb - 0.5, vb + 0.5}) least_side = std::min(least_side, legendre(m, q));
    const auto t = sweep(m, -2.0, 2.0, 9, 128);
    for (double q : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
      const double hs = legendre(m, q);
      for (std::size_t i = 0; i < t.size(); ++i)
        worst_fenchel = std::max(worst_fenchel, t.p[i] * q - t.hbar[i] - hs);
    }
  }
  ok = worst_zero < 1e-6 && least_side > 0.0 && worst_fenchel <= 1e-9;
  return {ok, fmt("max |H*(vbar)| = %.3e, min H*(vbar +- 0.5) = %.3e, worst Fenchel excess = %.3e", worst_zero,
                  least_side, worst_fenchel)};
}

Outcome mass_conservation() {
  const double eps = 1.0 / 32;
  auto s = init_state(preset("asymmetric-ratchet"), eps, domain_for(eps, 2.0), {{-0.5, 0.3}, {0.5, 0.7}});
  const double dt = max_stable_dt(s);
  const auto series = run(s, 1000 * dt, dt, 100);
  double drift = 0.0;
  for (const auto& d : series) drift = std::max(drift, std::abs(d.total / s.initial_mass - 1));
  return {drift < 1e-11, fmt("max relative mass drift over 1000 steps = %.3e (< 1e-11)", drift)};
}

TransportReport transport_report;

Outcome transport_asym() {
  transport_report = transport(preset("asymmetric-ratchet"), {1.0 / 16, 1.0 / 32, 1.0 / 64}, 1.0);
  const auto& r = transport_report;
  std::string d = fmt("vbar = %.6f; ", r.v_bar);
  for (const auto& row : r.rows)
    d += fmt("eps=%.5f err=%.3e (2h=%.2e) outside=%.2e; ", row.epsilon, row.error, 2 * row.h, row.outside_fraction);
  bool shrinking = true;
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    shrinking = shrinking && r.rows[i].outside_fraction <= r.rows[i - 1].outside_fraction + 1e-12;
  d += fmt("decreasing=%s accurate=%s", r.errors_decrease ? "yes" : "no", r.accuracy_ok ? "yes" : "no");
  return {r.errors_decrease && r.accuracy_ok && shrinking, d};
}

Outcome zero_velocity() {
  bool ok = true;
  std::string d;
  for (const std::string name : {"symmetric", "flat"}) {
    const auto r = transport(preset(name), {1.0 / 32}, 1.0);
    const auto& row = r.rows.front();
    ok = ok && std::abs(row.v_meas) <= 3 * row.h / r.T;
    d += fmt("%s |v| = %.2e (<= %.2e); ", name.c_str(), std::abs(row.v_meas), 3 * row.h / r.T);
    if (name == "flat") {
      const double expect = std::sqrt(2 * row.epsilon * r.T);
      const double rel = std::abs(row.spread / expect - 1);
      ok = ok && rel < 0.05;
      d += fmt("spread %.4f vs %.4f (rel %.2e)", row.spread, expect, rel);
    }
  }
  return {ok, d};
}

Outcome two_bumps() {
  const auto r = multimass(preset("asymmetric-ratchet"), 1.0 / 32, {{-2.0, 0.3}, {2.0, 0.7}}, 1.0);
  std::string d = fmt("captured %.7f; ", r.captured_fraction);
  for (const auto& w : r.windows) d += fmt("window %.3f: %.6f (rel %.2e); ", w.center, w.final_mass, w.relative_error);
  return {r.pass, d};
}

Outcome hopf_lax() {
  ProfileOptions po;
  po.window = 0.5;
  const auto flat = profile_compare(preset("flat"), 1.0 / 64, 1.0, po);
  bool ok = flat.sup_gap < 0.15 && flat.argmin_distance <= flat.argmin_tolerance;
  std::string d = fmt("flat sup gap %.3e (< 0.15); ", flat.sup_gap);
  for (const std::string name : {"symmetric", "asymmetric-ratchet"}) {
    const auto r = profile_compare(preset(name), 1.0 / 64, 1.0);
    ok = ok && r.argmin_distance <= r.argmin_tolerance;
    d += fmt("%s argmin off by %.2e (<= %.2e); ", name.c_str(), r.argmin_distance, r.argmin_tolerance);
  }
  d += fmt("flat argmin off by %.2e", flat.argmin_distance);
  return {ok, d};
}

Outcome diagnostics_bounded() {
  const auto m = preset("asymmetric-ratchet");
  const auto a = harnack_diag(m, 1.0 / 16, 0.25, 1.0);
  const auto b = harnack_diag(m, 1.0 / 32, 0.25, 1.0);
  const double ratio = std::max(a.c_hat / b.c_hat, b.c_hat / a.c_hat);
  const bool finite = std::isfinite(a.c_hat) && std::isfinite(b.c_hat);
  double excess = -1e300;
  for (const auto& row : transport_report.rows) excess = std::max(excess, row.envelope_excess);
  const bool envelope = !transport_report.rows.empty() && transport_report.envelope_ok;
  return {finite && ratio < 3 && envelope,
          fmt("C(1/16) = %.4f, C(1/32) = %.4f, ratio %.3f (< 3); max envelope excess %.3e (<= 1e-9)", a.c_hat,
              b.c_hat, ratio, excess)};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Hbar(0) = 0 for all presets", hbar_at_zero},
      {"flat model matches p^2", flat_analytic},
      {"adjoint gradient formula", gradient_formula},
      {"convexity and coercivity certificates", certificates},
      {"adjoint is constant at p = 0", adjoint_constant},
      {"Legendre self-consistency", legendre_consistency},
      {"mass conservation", mass_conservation},
      {"transport velocity", transport_asym},
      {"zero-velocity controls", zero_velocity},
      {"two bumps", two_bumps},
      {"Hopf-Lax profile", hopf_lax},
      {"Harnack and envelope diagnostics", diagnostics_bounded},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %zu: %s (%.1f s) -- %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), secs, o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
