#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "homog/cell.hpp"
#include "homog/motor_model.hpp"

using namespace homog;

namespace {

double max_dev_from_mean(const std::vector<double>& a, const std::vector<double>& b) {
  double mean = 0.0;
  for (double v : a) mean += v;
  for (double v : b) mean += v;
  mean /= static_cast<double>(a.size() + b.size());
  double dev = 0.0;
  for (double v : a) dev = std::max(dev, std::abs(v - mean));
  for (double v : b) dev = std::max(dev, std::abs(v - mean));
  return dev;
}

double hbar_at(const MotorModel1& m, double p, std::size_t n = 128) { return solve_cell(m, p, n).hbar; }

bool all_positive(const std::vector<double>& v) {
  for (double x : v)
    if (!(x > 0.0)) return false;
  return true;
}

}  // namespace

TEST_CASE("operator annihilates constants without drift or momentum", "[cell][assemble]") {
  const auto op = assemble(preset("flat"), 0.0, 32);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(64);
  CHECK(op.apply(ones).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("columns of the operator sum to zero at p = 0", "[cell][assemble]") {
  for (const auto& name : preset_names()) {
    const auto op = assemble(preset(name), 0.0, 64);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.matrix.rows());
    const Eigen::VectorXd colsum = op.matrix.transpose() * ones;
    CHECK(colsum.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("Peclet guard", "[cell][assemble]") {
  const auto model = preset("asymmetric-ratchet");
  const auto ok = assemble(model, 0.0, 64);
  // psi' = 1.4 pi (cos 2 pi y + cos 4 pi y), largest at the face y = 1/128
  const double pi = std::numbers::pi;
  CHECK(ok.peclet * ok.h() < 2.0);
  CHECK(ok.peclet == Catch::Approx(1.4 * pi * (std::cos(pi / 64) + std::cos(pi / 32))).epsilon(1e-9));

  try {
    assemble(model, 40.0, 16);
    FAIL("expected a Peclet violation");
  } catch (const PecletViolation& e) {
    const std::size_t need = e.n_required();
    CHECK(need % 2 == 0);
    CHECK(need > 16);
    CHECK(std::string(e.what()).find(std::to_string(need)) != std::string::npos);
    CHECK_NOTHROW(assemble(model, 40.0, need));
    CHECK_THROWS_AS(assemble(model, 40.0, need - 2), PecletViolation);
  }
  CHECK_THROWS_AS(assemble(model, 0.0, 15), InvalidGrid);
  CHECK_THROWS_AS(assemble(model, 0.0, 8), InvalidGrid);
}

TEST_CASE("analytic eigenvalues of the flat model", "[cell][eigen]") {
  const auto flat = preset("flat");
  const auto op0 = assemble(flat, 0.0, 32);
  const auto pair0 = principal_eigenpair(op0);
  CHECK(std::abs(pair0.lambda) < 1e-12);
  CHECK(pair0.vector.maxCoeff() - pair0.vector.minCoeff() < 1e-12);

  CHECK(std::abs(hbar_at(flat, 0.5) - 0.25) < 1e-8);

  const auto sol = solve_cell(flat, 1.0, 64);
  CHECK(std::abs(sol.hbar - 1.0) < 1e-8);
  CHECK(sol.residual < 1e-8);
  CHECK(max_dev_from_mean(sol.phi1, sol.phi2) < 1e-10);
}

TEST_CASE("Hbar vanishes at zero momentum", "[cell][eigen]") {
  for (const auto& name : preset_names()) CHECK(std::abs(hbar_at(preset(name), 0.0)) < 1e-8);
}

TEST_CASE("adjoint eigenvector is constant at p = 0", "[cell][adjoint]") {
  for (const auto& name : preset_names()) {
    const auto sol = solve_cell(preset(name), 0.0, 128);
    CHECK(max_dev_from_mean(sol.w1_adj, sol.w2_adj) < 1e-8);
  }
}

TEST_CASE("adjoint eigenvalue matches the primal one", "[cell][adjoint]") {
  const auto flat = preset("flat");
  for (double p : {-1.3, 0.2, 0.9}) {
    const auto op = assemble(flat, p, 32);
    const auto primal = principal_eigenpair(op);
    CHECK_NOTHROW(adjoint_eigenpair(op, primal));
    const auto adjoint = adjoint_eigenpair(op, primal);
    CHECK(std::abs(adjoint.lambda - primal.lambda) < 1e-9);
  }
  auto op = assemble(preset("asymmetric-ratchet"), 0.3, 64);
  auto primal = principal_eigenpair(op);
  primal.lambda += 1e-3;
  CHECK_THROWS_AS(adjoint_eigenpair(op, primal), EigenvalueMismatch);
}

TEST_CASE("normalizations and positivity", "[cell][adjoint]") {
  const auto model = preset("asymmetric-ratchet");
  const auto sol = solve_cell(model, 0.3, 128);
  CHECK(all_positive(sol.w1));
  CHECK(all_positive(sol.w2));
  CHECK(all_positive(sol.w1_adj));
  CHECK(all_positive(sol.w2_adj));
  const double h = 1.0 / 128.0;
  double pairing = 0.0;
  for (std::size_t i = 0; i < 128; ++i) pairing += sol.w1[i] * sol.w1_adj[i] + sol.w2[i] * sol.w2_adj[i];
  CHECK(std::abs(pairing * h - 1.0) < 1e-10);

  const auto op = assemble(model, 0.3, 128);
  Eigen::VectorXd w(256);
  for (std::size_t i = 0; i < 128; ++i) w[static_cast<Eigen::Index>(i)] = sol.w1[i], w[static_cast<Eigen::Index>(128 + i)] = sol.w2[i];
  CHECK(std::abs(chi_integral(op, w) - 1.0) < 1e-10);
}

TEST_CASE("eigenpair satisfies the discrete equation", "[cell][eigen][property]") {
  for (const auto& name : preset_names()) {
    for (double p : {-1.5, -0.4, 0.0, 0.8, 2.0}) {
      const auto op = assemble(preset(name), p, 64);
      const auto pair = principal_eigenpair(op);
      const Eigen::VectorXd r = op.apply(pair.vector) - pair.lambda * pair.vector;
      CHECK(r.cwiseAbs().maxCoeff() < 1e-8 * (1.0 + std::abs(pair.lambda)) * pair.vector.cwiseAbs().maxCoeff());
      CHECK(pair.vector.minCoeff() > 0.0);
    }
  }
}

TEST_CASE("iteration cap is enforced", "[cell][eigen]") {
  const auto op = assemble(preset("asymmetric-ratchet"), 0.5, 64);
  EigenOptions opt;
  opt.max_iterations = 2;
  CHECK_THROWS_AS(principal_eigenpair(op, opt), NoConvergence);
  opt = {};
  opt.tol = 0.0;
  CHECK_THROWS_AS(principal_eigenpair(op, opt), ValidationError);
}

TEST_CASE("corrector residual converges at second order", "[cell][convergence]") {
  const auto model = preset("asymmetric-ratchet");
  const double r64 = solve_cell(model, 0.0, 64).residual;
  const double r128 = solve_cell(model, 0.0, 128).residual;
  CHECK(r64 / r128 >= 4.0 - 0.05);
  CHECK(r128 < r64);
}

TEST_CASE("Hbar converges at second order in h", "[cell][convergence]") {
  const auto model = preset("asymmetric-ratchet");
  for (double p : {0.5, -1.0}) {
    const double h32 = hbar_at(model, p, 32), h64 = hbar_at(model, p, 64), h128 = hbar_at(model, p, 128);
    const double ratio = std::abs(h32 - h64) / std::abs(h64 - h128);
    CHECK(ratio > 3.5);
  }
}

TEST_CASE("Hbar agrees with an independent spectral discretization", "[cell][oracle]") {
  // dense Fourier-collocation eigenvalues of the same system at N = 128
  const auto model = preset("asymmetric-ratchet");
  CHECK(std::abs(hbar_at(model, 0.5, 256) - 0.24836425361648) < 2e-4);
}

TEST_CASE("symmetric model has an even Hbar", "[cell][symmetry]") {
  const auto sym = preset("symmetric");
  CHECK(std::abs(hbar_at(sym, 0.7) - hbar_at(sym, -0.7)) < 1e-8);
  for (double p : {0.25, 1.1, 1.9}) CHECK(std::abs(hbar_at(sym, p) - hbar_at(sym, -p)) < 1e-8);
  const auto sol = solve_cell(sym, 0.0, 128);
  CHECK(std::abs(dhbar(sol, sym)[0]) < 1e-7);
}

TEST_CASE("gradient of Hbar", "[cell][dhbar]") {
  const auto flat = preset("flat");
  CHECK(std::abs(dhbar(solve_cell(flat, 0.5, 64), flat)[0] - 1.0) < 1e-8);

  for (const auto& name : preset_names()) {
    const auto m = preset(name);
    for (double p : {-1.2, 0.0, 0.45, 1.7}) {
      const double d = 1e-4;
      const double fd = (hbar_at(m, p + d) - hbar_at(m, p - d)) / (2 * d);
      CHECK(std::abs(dhbar(solve_cell(m, p, 128), m)[0] - fd) < 1e-5);
    }
  }
}

TEST_CASE("transport velocity golden value", "[cell][dhbar][golden]") {
  // frozen from this solver at N = 256; a spectral discretization of the
  // continuum problem gives 0.0529531 and the N = 128/256 Richardson
  // extrapolate agrees with it to 1e-7
  const auto m = preset("asymmetric-ratchet");
  const double v256 = dhbar(solve_cell(m, 0.0, 256), m)[0];
  CHECK(std::abs(v256 - 0.0529541779697144) < 1e-9);
  const double v128 = dhbar(solve_cell(m, 0.0, 128), m)[0];
  CHECK(std::abs(v256 + (v256 - v128) / 3.0 - 0.0529530935) < 2e-7);
  CHECK(std::abs(v128 - v256) < 5e-6);
}

TEST_CASE("two-potential variant", "[cell][two-potential]") {
  const auto m = preset("two-potential");
  const auto sol = solve_cell(m, 0.0, 128);
  CHECK(std::abs(sol.hbar) < 1e-8);
  CHECK(max_dev_from_mean(sol.w1_adj, sol.w2_adj) < 1e-8);
  // spectral oracle: 0.0480150
  CHECK(std::abs(dhbar(sol, m)[0] - 0.0480150227) < 5e-6);
  const double d = 1e-4;
  const double fd = (hbar_at(m, 0.6 + d) - hbar_at(m, 0.6 - d)) / (2 * d);
  CHECK(std::abs(dhbar(solve_cell(m, 0.6, 128), m)[0] - fd) < 1e-5);
}

TEST_CASE("chi formulation is consistent with the w formulation", "[cell][property]") {
  for (const char* name : {"symmetric", "asymmetric-ratchet", "two-potential"}) {
    const auto m = preset(name);
    for (double p : {-0.8, 0.3, 1.2}) {
      const auto sol = solve_cell(m, p, 128);
      const double rw = w_form_residual(m, sol);
      const double rc = chi_form_residual(m, sol);
      CHECK(rc < 10.0 * rw);
    }
  }
}

TEST_CASE("two-dimensional cell problem separates for flat coefficients", "[cell][2d]") {
  const auto one = [](const Point<2>&) { return 1.0; };
  const auto zero = [](const Point<2>&) { return 0.0; };
  const auto m = make_motor_model<2>(sample_field<2>(zero, 16), std::nullopt, sample_field<2>(one, 16),
                                     sample_field<2>(one, 16), "flat-2d");
  const auto sol = solve_cell<2>(m, Momentum<2>{0.3, -0.4}, 16);
  CHECK(std::abs(sol.hbar - 0.25) < 1e-8);
  const auto g = dhbar(sol, m);
  CHECK(std::abs(g[0] - 0.6) < 1e-8);
  CHECK(std::abs(g[1] + 0.8) < 1e-8);
}
