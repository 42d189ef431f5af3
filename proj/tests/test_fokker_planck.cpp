#include <catch_amalgamated.hpp>

#include <cmath>
#include <algorithm>
#include <numbers>

#include <Eigen/Dense>

#include "homog/experiments.hpp"
#include "homog/fokker_planck.hpp"

using namespace homog;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

SimState gaussian_state(const MotorModel1& m, double eps, const DomainSpec& dom, double sigma) {
  const std::size_t cells = dom.periods * dom.cells_per_period;
  const double h = eps / static_cast<double>(dom.cells_per_period);
  const double left = -0.5 * eps * static_cast<double>(dom.periods);
  std::vector<double> n1(cells), n2(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    const double x = left + static_cast<double>(j) * h;
    n1[j] = n2[j] = std::exp(-x * x / (2 * sigma * sigma));
  }
  return make_state(m, eps, dom, n1, n2);
}

}  // namespace

TEST_CASE("cyclic diffusion solve matches a dense solve", "[fp][diffusion]") {
  const std::size_t n = 12;
  const double r = 0.7;
  detail::CyclicDiffusionSolver solver(n, r);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    a(ii, ii) = 1 + 2 * r;
    a(ii, static_cast<Eigen::Index>((i + 1) % n)) = -r;
    a(ii, static_cast<Eigen::Index>((i + n - 1) % n)) = -r;
    rhs[i] = b[ii] = std::sin(1.0 + 3.0 * static_cast<double>(i)) + 2.0;
  }
  const Eigen::VectorXd x = a.partialPivLu().solve(b);
  solver.solve(rhs);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(rhs[i] - x[static_cast<Eigen::Index>(i)]) < 1e-13);
}

TEST_CASE("single bump initial state", "[fp][init]") {
  const auto m = preset("asymmetric-ratchet");
  const auto s = init_state(m, 1.0 / 32, domain_for(1.0 / 32, 1.0), {{0.0, 1.0}});
  CHECK(std::abs(s.total_mass() - 1.0) < 1e-12);
  CHECK(s.n1 == s.n2);
  CHECK(s.x[s.cells() / 2] == 0.0);
}

TEST_CASE("two bump initial state", "[fp][init]") {
  const auto m = preset("symmetric");
  const double eps = 1.0 / 32;
  const auto dom = domain_for(eps, 2.0);
  const double L = eps * static_cast<double>(dom.periods);
  const auto s = init_state(m, eps, dom, {{-L / 4, 0.3}, {L / 4, 0.7}});
  CHECK(std::abs(s.total_mass() - 1.0) < 1e-12);
  double left = 0.0, right = 0.0;
  for (std::size_t j = 0; j < s.cells(); ++j) (s.x[j] < 0 ? left : right) += (s.n1[j] + s.n2[j]) * s.h;
  CHECK(std::abs(left - 0.3) < 1e-10);
  CHECK(std::abs(right - 0.7) < 1e-10);
}

TEST_CASE("bump profile has the prescribed exponential envelope", "[fp][init]") {
  const double eps = 1.0 / 16, A = 2.0;
  const auto s = init_state(preset("flat"), eps, domain_for(eps, 2.0), {{0.0, 1.0}}, A);
  // on a long grid sum_j exp(-A |j h| / eps) = coth(A h / (2 eps))
  const double c = 1.0 / (s.h / std::tanh(A * s.h / (2 * eps)));
  const std::size_t j = s.cells() / 2 + static_cast<std::size_t>(std::lround(0.5 / s.h));
  REQUIRE(std::abs(s.x[j] - 0.5) < 1e-12);
  CHECK(std::abs(-eps * std::log(s.n1[j]) - (A * 0.5 - eps * std::log(c / 2))) < 1e-8);
  CHECK(std::abs(s.B - eps * std::log(c / 2)) < 1e-10);
  CHECK(envelope_excess(s, 0.0) <= 1e-12);
}

TEST_CASE("initial state validation", "[fp][init]") {
  const auto m = preset("flat");
  const double eps = 1.0 / 16;
  const auto dom = domain_for(eps, 1.0);
  CHECK_THROWS_AS(init_state(m, eps, dom, {{0.98, 1.0}}), DomainTooSmall);
  CHECK_THROWS_AS(init_state(m, eps, dom, {{0.0, 0.0}}), InvalidMass);
  CHECK_THROWS_AS(init_state(m, eps, dom, {{0.0, -1.0}}), InvalidMass);
  CHECK_THROWS_AS(init_state(m, eps, dom, {}), InvalidMass);
  CHECK_THROWS_AS(init_state(m, eps, dom, {{0.0, 1.0}}, 0.0), ValidationError);
  CHECK_THROWS_AS(make_state(m, eps, dom, {1.0}, {1.0}), InvalidMass);
}

TEST_CASE("uniform data only feels the reaction", "[fp][step]") {
  const auto m = preset("flat");
  const double eps = 1.0 / 16;
  const auto dom = domain_for(eps, 0.5);
  const std::size_t cells = dom.periods * dom.cells_per_period;
  auto s = make_state(m, eps, dom, std::vector<double>(cells, 2.0), std::vector<double>(cells, 0.0));
  const double dt = 1e-3;
  advance(s, dt);
  const double decay = std::exp(-2 * dt / eps);
  for (std::size_t j = 0; j < cells; ++j) {
    CHECK(std::abs(s.n1[j] + s.n2[j] - 2.0) < 1e-12);
    CHECK(std::abs((s.n1[j] - s.n2[j]) - 2.0 * decay) < 1e-12);
  }
}

TEST_CASE("reaction half step preserves the local sum", "[fp][step]") {
  const auto m = preset("asymmetric-ratchet");
  auto s = init_state(m, 1.0 / 16, domain_for(1.0 / 16, 1.0), {{0.1, 1.0}});
  for (std::size_t j = 0; j < s.cells(); ++j) s.n2[j] *= 1.0 + 0.5 * std::sin(static_cast<double>(j));
  const auto before = s;
  detail::prepare(s, 1e-3);
  detail::react_half(s);
  for (std::size_t j = 0; j < s.cells(); ++j) {
    const double sum = before.n1[j] + before.n2[j];
    CHECK(std::abs(s.n1[j] + s.n2[j] - sum) <= 4e-16 * sum);
  }
}

TEST_CASE("steps conserve mass", "[fp][step][property]") {
  for (const auto& name : preset_names()) {
    const auto m = preset(name);
    auto s = init_state(m, 1.0 / 32, domain_for(1.0 / 32, 1.0), {{0.0, 1.0}});
    const double dt = 0.9 * std::min(max_stable_dt(s), s.h);
    for (int k = 0; k < 50; ++k) {
      const double before = s.total_mass();
      advance(s, dt);
      CHECK(rel(s.total_mass(), before) < 1e-13);
    }
  }
}

TEST_CASE("densities stay positive", "[fp][step][property]") {
  const auto m = preset("asymmetric-ratchet");
  auto s = init_state(m, 1.0 / 16, domain_for(1.0 / 16, 0.75), {{0.0, 1.0}});
  const double dt = max_stable_dt(s);
  for (int k = 0; k < 200; ++k) {
    advance(s, dt);
    for (std::size_t j = 0; j < s.cells(); ++j) {
      REQUIRE(s.n1[j] > 0.0);
      REQUIRE(s.n2[j] > 0.0);
    }
  }
}

TEST_CASE("time step above the upwind limit is rejected", "[fp][step]") {
  auto s = init_state(preset("asymmetric-ratchet"), 1.0 / 16, domain_for(1.0 / 16, 1.0), {{0.0, 1.0}});
  const double lim = max_stable_dt(s);
  // 0.9 h / max |psi'| over faces; psi' = 1.4 pi (cos 2 pi y + cos 4 pi y) peaks at the face y = 1/128
  const double pi = std::numbers::pi;
  CHECK(lim == Catch::Approx(0.9 * s.h / (1.4 * pi * (std::cos(pi / 64) + std::cos(pi / 32)))).epsilon(1e-9));
  try {
    advance(s, 2 * lim);
    FAIL("expected a CFL violation");
  } catch (const CflViolation& e) {
    CHECK(e.dt_max() == lim);
  }
  CHECK_THROWS_AS(advance(s, -1.0), ValidationError);
  CHECK_NOTHROW(advance(s, lim));
}

TEST_CASE("pure diffusion spreads at rate 2 eps", "[fp][step][oracle]") {
  const double eps = 1.0 / 32;
  auto s = gaussian_state(preset("flat"), eps, domain_for(eps, 2.0), 0.05);
  const double var0 = std::pow(diagnostics(s, {.fields = false}).spread, 2);
  const double dt = 0.9 * s.h;
  for (int k = 0; k < 100; ++k) advance(s, dt);
  const double var1 = std::pow(diagnostics(s, {.fields = false}).spread, 2);
  CHECK(rel(var1 - var0, 2 * eps * s.t) < 0.05);
}

TEST_CASE("run bookkeeping", "[fp][run]") {
  const auto m = preset("asymmetric-ratchet");
  auto s = init_state(m, 1.0 / 16, domain_for(1.0 / 16, 2.0), {{0.0, 1.0}});
  const auto zero = run(s, 0.0, max_stable_dt(s), 5);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].t == 0.0);
  CHECK_THROWS_AS(run(s, 1.0, 10.0, 5), CflViolation);
  CHECK_THROWS_AS(run(s, 1.0, 1e-3, 0), ValidationError);
}

TEST_CASE("ratchet run conserves mass with monotone time stamps", "[fp][run]") {
  const double eps = 1.0 / 32;
  const auto m = preset("asymmetric-ratchet");
  auto s = init_state(m, eps, simulation_domain(eps, 1.0, 0.053, {0.0}, 64), {{0.0, 1.0}});
  const double dt = 0.5 * max_stable_dt(s);
  const auto series = run(s, 1.0, dt, 1000);
  CHECK(series.back().t == 1.0);
  for (std::size_t k = 1; k < series.size(); ++k) {
    CHECK(series[k].t > series[k - 1].t);
    CHECK(rel(series[k].total, 1.0) < 1e-11);
    CHECK(series[k].total == series[k].mass1 + series[k].mass2);
  }
  // the envelope barrier with the computed rate holds away from the seam
  CHECK(envelope_excess(s, envelope_rate(m, s.A)) <= 1e-9);
}

TEST_CASE("symmetric model shows no net drift", "[fp][run][symmetry]") {
  const double eps = 1.0 / 16;
  auto s = init_state(preset("symmetric"), eps, domain_for(eps, 3.0), {{0.0, 1.0}});
  const auto d0 = diagnostics(s);
  CHECK(std::abs(d0.com) <= s.h);
  const auto series = run(s, 1.0, 0.5 * max_stable_dt(s), 200);
  for (const auto& d : series) CHECK(std::abs(d.com) <= 3 * s.h);
}

TEST_CASE("diagnostics fields", "[fp][diagnostics]") {
  const auto s = init_state(preset("flat"), 1.0 / 16, domain_for(1.0 / 16, 1.0), {{0.0, 1.0}});
  const auto d = diagnostics(s);
  CHECK(d.r1 == d.r2);
  CHECK(std::abs(d.com) <= s.h);
  CHECK(d.argmin_r == 0.0);
  CHECK(d.window_half_width == 3.0);
  const auto with_v = diagnostics(s, {.v_bar = 10.0});
  CHECK(with_v.window_half_width == 3.0);
}

TEST_CASE("mass outside the window shrinks with eps", "[fp][diagnostics]") {
  const auto m = preset("asymmetric-ratchet");
  const double vbar = 0.0529577;
  double frac[2];
  int k = 0;
  for (double eps : {1.0 / 32, 1.0 / 64}) {
    auto s = init_state(m, eps, simulation_domain(eps, 0.5, vbar, {0.0}, 64), {{0.0, 1.0}});
    RunOptions ro;
    ro.diag.v_bar = vbar;
    ro.diag.window_half_width = 0.5;
    const auto series = run(s, 0.5, 0.5 * max_stable_dt(s), 100000, ro);
    frac[k++] = series.back().outside_fraction;
  }
  CHECK(frac[0] > 0.0);
  CHECK(frac[1] < frac[0]);
}

TEST_CASE("seam contact is detected", "[fp][run]") {
  const double eps = 1.0 / 16;
  auto s = init_state(preset("flat"), eps, domain_for(eps, 0.7), {{0.0, 1.0}});
  CHECK_THROWS_AS(run(s, 1.0, 0.9 * s.h, 50), DomainTooSmall);
}

TEST_CASE("runs are deterministic", "[fp][run]") {
  const auto m = preset("two-potential");
  auto a = init_state(m, 1.0 / 16, domain_for(1.0 / 16, 1.5), {{0.0, 1.0}});
  auto b = a;
  const double dt = 0.5 * max_stable_dt(a);
  run(a, 0.2, dt, 10);
  run(b, 0.2, dt, 10);
  CHECK(a.n1 == b.n1);
  CHECK(a.n2 == b.n2);
}

TEST_CASE("snapshot and manifest output", "[fp][io]") {
  auto s = init_state(preset("flat"), 1.0 / 16, domain_for(1.0 / 16, 1.0), {{0.0, 1.0}});
  const auto csv = snapshot_csv(s);
  CHECK(csv.rfind("x,n1,n2,r1,r2\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == s.cells() + 1);
  const auto series = run(s, 0.1, 0.9 * s.h, 20);
  const auto j = run_manifest(s, 0.9 * s.h, series);
  CHECK(j["mass_conserved"].get<bool>());
  CHECK(j["diagnostics"].size() == series.size());
  CHECK(j["epsilon"].get<double>() == 1.0 / 16);
  CHECK(j["model_fingerprint"].get<std::string>().size() == 16);
}
