// Command-line front end.
//
// Exit codes: 0 ok, 2 invalid input, 3 solver failure, 4 a certificate or
// experiment verdict failed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "homog/cell.hpp"
#include "homog/effective.hpp"
#include "homog/errors.hpp"
#include "homog/experiments.hpp"
#include "homog/fokker_planck.hpp"
#include "homog/io.hpp"
#include "homog/motor_model.hpp"

namespace fs = std::filesystem;
using homog::io::atomic_write;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kSolver = 3;
constexpr int kVerdict = 4;

struct Common {
  std::string model = "asymmetric-ratchet";
  std::size_t grid = 128;
  double tol = 1e-11;
  std::string out = "out";
  bool gnuplot = false;
  std::string config;
};

fs::path output_dir(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("HOMOG_OUT_ROOT"); root && *root) p = fs::path(root) / p;
  }
  return p;
}

homog::EigenOptions eigen(const Common& c) {
  if (!(c.tol > 0.0)) throw homog::ValidationError("--tol must be positive");
  homog::EigenOptions e;
  e.tol = c.tol;
  return e;
}

std::vector<homog::Bump> read_bumps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw homog::ValidationError("cannot read bump file '" + path + "'");
  std::vector<homog::Bump> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ss(line);
    double c = 0.0, m = 0.0;
    if (!(ss >> c)) continue;
    if (!(ss >> m)) throw homog::InvalidMass("bump line needs 'center mass': " + line);
    out.push_back({c, m});
  }
  if (out.empty()) throw homog::InvalidMass("bump file '" + path + "' lists no bumps");
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void gnuplot_stub(const fs::path& dir, const std::string& name, const std::string& body) {
  atomic_write(dir / (name + ".gp"), "# gnuplot -p " + name + ".gp\n" + body);
}

// Values from the config file replace whatever the command line said.
void apply_config(CLI::App& sub, const nlohmann::json& cfg) {
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + it.key());
    } catch (const CLI::OptionNotFound&) {
      throw homog::ValidationError("config key '" + it.key() + "' is not an option of '" +
                                   sub.get_name() + "'");
    }
    opt->clear();
    auto add = [&](const nlohmann::json& v) {
      if (v.is_string()) opt->add_result(v.get<std::string>());
      else if (v.is_boolean()) opt->add_result(v.get<bool>() ? "true" : "false");
      else opt->add_result(v.dump());
    };
    if (it->is_array()) {
      for (const auto& v : *it) add(v);
    } else {
      add(*it);
    }
    opt->run_callback();
  }
}

void add_common(CLI::App* sub, Common& c, bool with_out) {
  sub->add_option("--model", c.model, "preset name or model file")->capture_default_str();
  sub->add_option("--grid", c.grid, "cell-problem grid size N")->capture_default_str();
  sub->add_option("--tol", c.tol, "eigenvalue tolerance")->capture_default_str();
  sub->add_option("--config", c.config, "JSON file whose keys override the flags");
  if (with_out) {
    sub->add_option("--out", c.out, "output directory (relative paths resolve under $HOMOG_OUT_ROOT)")
        ->capture_default_str();
    sub->add_flag("--emit-gnuplot", c.gnuplot, "also write gnuplot scripts");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective Hamiltonian and transport for two-state motor models"};
  app.require_subcommand(1);
  Common c;

  double p = 0.0;
  auto* hbar_cmd = app.add_subcommand("hbar", "solve the cell problem at one momentum");
  add_common(hbar_cmd, c, false);
  hbar_cmd->add_option("--p", p, "momentum")->required();

  double pmin = -2.0, pmax = 2.0;
  std::size_t count = 41;
  std::string replay;
  auto* sweep_cmd = app.add_subcommand("sweep", "tabulate Hbar and check convexity and coercivity");
  add_common(sweep_cmd, c, true);
  sweep_cmd->add_option("--pmin", pmin)->capture_default_str();
  sweep_cmd->add_option("--pmax", pmax)->capture_default_str();
  sweep_cmd->add_option("--count", count)->capture_default_str();
  sweep_cmd->add_option("--replay", replay, "check an existing table instead of computing one");

  auto* velocity_cmd = app.add_subcommand("velocity", "transport velocity DHbar(0)");
  add_common(velocity_cmd, c, false);

  homog::SimOptions sim;
  double eps = 1.0 / 32.0, T = 1.0;
  std::string bumps_file;
  double dt = 0.0;
  std::size_t snapshot_every = 0;
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--cells-per-period", sim.cells_per_period)->capture_default_str();
    sub->add_option("--A", sim.A, "envelope slope of the initial bumps")->capture_default_str();
    sub->add_option("--cfl", sim.cfl, "time step as a fraction of the upwind limit")->capture_default_str();
    sub->add_option("--snapshots", sim.snapshots, "snapshots per run")->capture_default_str();
  };
  auto* simulate_cmd = app.add_subcommand("simulate", "run the two-state simulator");
  add_common(simulate_cmd, c, true);
  add_sim(simulate_cmd);
  simulate_cmd->add_option("--eps", eps)->capture_default_str();
  simulate_cmd->add_option("--T", T)->capture_default_str();
  simulate_cmd->add_option("--bumps", bumps_file, "file of 'center mass' lines");
  simulate_cmd->add_option("--dt", dt, "time step (default from --cfl)");
  simulate_cmd->add_option("--snapshot-every", snapshot_every, "steps between snapshots");

  auto* exp_cmd = app.add_subcommand("experiment", "verification experiments");
  exp_cmd->require_subcommand(1);
  std::vector<double> eps_list{1.0 / 16, 1.0 / 32, 1.0 / 64};
  auto* transport_cmd = exp_cmd->add_subcommand("transport", "measured vs effective velocity");
  add_common(transport_cmd, c, true);
  add_sim(transport_cmd);
  transport_cmd->add_option("--eps", eps_list, "decreasing list of eps")->capture_default_str();
  transport_cmd->add_option("--T", T)->capture_default_str();

  auto* multimass_cmd = exp_cmd->add_subcommand("multimass", "several bumps transported together");
  add_common(multimass_cmd, c, true);
  add_sim(multimass_cmd);
  multimass_cmd->add_option("--eps", eps)->capture_default_str();
  multimass_cmd->add_option("--T", T)->capture_default_str();
  multimass_cmd->add_option("--bumps", bumps_file, "file of 'center mass' lines")->required();

  double t_eval = 1.0, window = 1.0;
  auto* profile_cmd = exp_cmd->add_subcommand("profile", "rate function vs Hopf-Lax profile");
  add_common(profile_cmd, c, true);
  add_sim(profile_cmd);
  profile_cmd->add_option("--eps", eps)->capture_default_str();
  profile_cmd->add_option("--t", t_eval)->capture_default_str();
  profile_cmd->add_option("--window", window, "half-width of the comparison window")->capture_default_str();

  double t0 = 0.25, delta = 1.0;
  std::vector<double> harnack_eps{1.0 / 16, 1.0 / 32};
  auto* harnack_cmd = exp_cmd->add_subcommand("harnack", "empirical Harnack constant");
  add_common(harnack_cmd, c, true);
  add_sim(harnack_cmd);
  harnack_cmd->add_option("--eps", harnack_eps)->capture_default_str();
  harnack_cmd->add_option("--t0", t0)->capture_default_str();
  harnack_cmd->add_option("--delta", delta)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  CLI::App* active = nullptr;
  for (auto* sub : {hbar_cmd, sweep_cmd, velocity_cmd, simulate_cmd, transport_cmd, multimass_cmd,
                    profile_cmd, harnack_cmd})
    if (sub->parsed()) active = sub;

  try {
    if (!c.config.empty()) {
      std::ifstream in(c.config);
      if (!in) throw homog::ValidationError("cannot read config '" + c.config + "'");
      nlohmann::json cfg;
      try {
        cfg = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw homog::ValidationError("config '" + c.config + "' is not valid JSON: " + e.what());
      }
      if (!cfg.is_object()) throw homog::ValidationError("config must be a JSON object");
      try {
        apply_config(*active, cfg);
      } catch (const CLI::ParseError& e) {
        throw homog::ValidationError(std::string("config: ") + e.what());
      }
    }

    const auto model = homog::load_model(c.model, 128);
    const auto eig = eigen(c);
    const fs::path dir = output_dir(c.out);

    if (active == hbar_cmd) {
      const auto sol = homog::solve_cell(model, p, c.grid, eig);
      const double g = homog::dhbar(sol, model)[0];
      std::cout << "hbar = " << homog::io::num(sol.hbar) << "\n"
                << "dhbar = " << homog::io::num(g) << "\n"
                << "residual = " << fmt("%.3e", sol.residual) << "\n";
      return kOk;
    }

    if (active == velocity_cmd) {
      const auto v = homog::velocity(model, c.grid, eig);
      std::cout << "v_bar = " << fmt("%.6g", v.v_bar) << "\n"
                << "hstar(v_bar) = " << fmt("%.3e", v.hstar_at_vbar) << "\n";
      return kOk;
    }

    if (active == sweep_cmd) {
      homog::HbarTable table;
      if (!replay.empty()) {
        table = homog::read_table(replay);
      } else {
        if (count < 3 || !(pmin < pmax)) throw homog::ValidationError("sweep needs count >= 3 and pmin < pmax");
        table = homog::sweep(model, pmin, pmax, count, c.grid, eig);
        homog::write_table(table, dir / "hbar.csv");
      }
      const auto convex = homog::check_convexity(table);
      const auto coercive = homog::coercivity_check(model, table);
      nlohmann::json cert{{"convexity", {{"pass", convex.pass},
                                         {"min_margin", convex.min_margin},
                                         {"pairs_checked", convex.pairs_checked},
                                         {"violations", convex.violations.size()}}},
                          {"coercivity", {{"pass", coercive.pass},
                                          {"min_slack", coercive.min_slack},
                                          {"violations", coercive.violations}}}};
      atomic_write(dir / "certificates.json", cert.dump(2) + "\n");
      if (c.gnuplot && replay.empty())
        gnuplot_stub(dir, "hbar",
                     "set datafile separator ','\nset key autotitle columnhead\n"
                     "plot 'hbar.csv' using 1:2 with lines title 'Hbar(p)'\n");
      std::cout << "rows " << table.size() << "\n"
                << "convexity " << (convex.pass ? "PASS" : "FAIL") << " min margin "
                << fmt("%.3e", convex.min_margin) << "\n"
                << "coercivity " << (coercive.pass ? "PASS" : "FAIL") << " min slack "
                << fmt("%.3e", coercive.min_slack) << "\n";
      return convex.pass && coercive.pass ? kOk : kVerdict;
    }

    if (active == simulate_cmd) {
      if (!(T >= 0.0)) throw homog::ValidationError("--T must be nonnegative");
      if (!(eps > 0.0)) throw homog::ValidationError("--eps must be positive");
      const auto bumps = bumps_file.empty() ? std::vector<homog::Bump>{{0.0, 1.0}} : read_bumps(bumps_file);
      std::vector<double> centers;
      for (const auto& b : bumps) centers.push_back(b.center);
      const double v_bar = homog::evaluate_hbar(model, 0.0, c.grid, eig).dhbar;
      const auto dom = homog::simulation_domain(eps, std::max(T, eps), v_bar, centers, sim.cells_per_period);
      auto state = homog::init_state(model, eps, dom, bumps, sim.A);
      auto [step, stride] = homog::run_schedule(state, T, sim);
      if (dt > 0.0) {
        step = dt;
        stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt)) / sim.snapshots);
      }
      if (snapshot_every > 0) stride = snapshot_every;
      const double dt_max = homog::max_stable_dt(state);
      if (step > dt_max * (1.0 + 1e-12))
        throw homog::CflViolation("--dt exceeds the upwind limit " + fmt("%.6g", dt_max), dt_max);

      std::vector<std::string> files;
      std::vector<std::pair<std::string, std::string>> pending;
      homog::RunOptions ro;
      ro.diag.v_bar = v_bar;
      auto series = homog::run(state, T, step, stride, ro, [&](const homog::SimState& s, const homog::Diagnostics&) {
        char name[40];
        std::snprintf(name, sizeof name, "snapshot_%04zu.csv", files.size());
        files.emplace_back(name);
        pending.emplace_back(name, homog::snapshot_csv(s));
      });
      for (const auto& [name, body] : pending) atomic_write(dir / name, body);
      const auto manifest = homog::run_manifest(state, step, series, files);
      atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
      if (c.gnuplot) {
        std::vector<std::pair<double, double>> com;
        for (const auto& d : series) com.emplace_back(d.t, d.com);
        atomic_write(dir / "com.dat", homog::two_columns(com));
        gnuplot_stub(dir, "simulate",
                     "set datafile separator ','\nset key autotitle columnhead\n"
                     "plot '" + files.back() + "' using 1:2 with lines, '' using 1:3 with lines\n");
      }
      std::cout << "snapshots " << files.size() << "\n"
                << "final mass " << homog::io::num(state.total_mass()) << "\n"
                << "max relative mass drift " << fmt("%.3e", manifest["max_relative_mass_drift"].get<double>())
                << "\n";
      return manifest["mass_conserved"].get<bool>() ? kOk : kVerdict;
    }

    sim.n = c.grid;
    sim.eigen = eig;

    if (active == transport_cmd) {
      const auto r = homog::transport(model, eps_list, T, sim);
      atomic_write(dir / "transport.json", homog::to_json(r).dump(2) + "\n");
      atomic_write(dir / "transport.txt", homog::to_text(r));
      if (c.gnuplot) {
        std::string plot = "plot ";
        for (std::size_t k = 0; k < r.rows.size(); ++k) {
          const std::string name = "com_" + std::to_string(k) + ".dat";
          atomic_write(dir / name, homog::two_columns(r.rows[k].com));
          plot += (k ? ", '" : "'") + name + "' with lines title 'eps=" + fmt("%g", r.rows[k].epsilon) + "'";
        }
        plot += ", " + homog::io::num(r.v_bar) + "*x title 'v_bar t'\n";
        gnuplot_stub(dir, "transport", plot);
      }
      std::cout << homog::to_text(r);
      return r.pass ? kOk : kVerdict;
    }

    if (active == multimass_cmd) {
      const auto r = homog::multimass(model, eps, read_bumps(bumps_file), T, sim);
      atomic_write(dir / "multimass.json", homog::to_json(r).dump(2) + "\n");
      atomic_write(dir / "multimass.txt", homog::to_text(r));
      std::cout << homog::to_text(r);
      return r.pass ? kOk : kVerdict;
    }

    if (active == profile_cmd) {
      homog::ProfileOptions po;
      po.sim = sim;
      po.window = window;
      const auto r = homog::profile_compare(model, eps, t_eval, po);
      atomic_write(dir / "profile.json", homog::to_json(r).dump(2) + "\n");
      atomic_write(dir / "profile.txt", homog::to_text(r));
      if (c.gnuplot) {
        atomic_write(dir / "profile_rate.dat", homog::two_columns(r.fine_x, r.fine_r));
        atomic_write(dir / "profile_hopf_lax.dat", homog::two_columns(r.x, r.hopf_lax));
        gnuplot_stub(dir, "profile",
                     "plot 'profile_rate.dat' with lines title 'R_eps', "
                     "'profile_hopf_lax.dat' with points title 't H*(x/t)'\n");
      }
      std::cout << homog::to_text(r);
      return r.pass ? kOk : kVerdict;
    }

    if (active == harnack_cmd) {
      nlohmann::json j = nlohmann::json::array();
      std::string text;
      double first = 0.0, worst = 0.0;
      for (std::size_t k = 0; k < harnack_eps.size(); ++k) {
        const auto r = homog::harnack_diag(model, harnack_eps[k], t0, delta, sim);
        j.push_back(homog::to_json(r));
        text += homog::to_text(r);
        if (k == 0) first = r.c_hat;
        worst = std::max(worst, r.c_hat);
      }
      const bool bounded = std::isfinite(worst) && (first <= 0.0 ? worst <= 3.0 * std::abs(first) + 1.0
                                                                 : worst < 3.0 * first);
      text += std::string("  bounded: ") + (bounded ? "yes" : "no") + "\n";
      atomic_write(dir / "harnack.json", nlohmann::json{{"runs", j}, {"bounded", bounded}}.dump(2) + "\n");
      atomic_write(dir / "harnack.txt", text);
      std::cout << text;
      return bounded ? kOk : kVerdict;
    }
  } catch (const homog::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const homog::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const homog::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
