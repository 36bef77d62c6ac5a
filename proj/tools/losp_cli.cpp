// losp: command-line front end for the line-of-sight percolation lab.
//
// Exit codes: 0 ok, 2 precondition error, 3 budget or bracketing failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "losp/branching.hpp"
#include "losp/errors.hpp"
#include "losp/estimators.hpp"
#include "losp/gilbert.hpp"
#include "losp/lattice.hpp"
#include "losp/scan.hpp"
#include "losp/sweep.hpp"
#include "losp/walk.hpp"

using namespace losp;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::uint64_t reps = 1;
  unsigned threads = 0;
};

void add_stochastic(CLI::App* cmd, Common& c, std::uint64_t default_reps) {
  c.reps = default_reps;
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--reps", c.reps, "replications")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

void print_mean(const char* label, const MeanEstimate& m) {
  std::printf("%s %.10g stderr %.3g (n=%llu)\n", label, m.mean, m.std_error,
              static_cast<unsigned long long>(m.count));
}

Topology parse_topology(const std::string& s) {
  if (s == "grid") return Topology::grid;
  if (s == "torus") return Topology::torus;
  throw PreconditionError("topology must be grid or torus");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-of-sight percolation: simulation and theory"};
  app.require_subcommand(1);

  // lattice
  Common lat_c;
  LatticeSpec lat;
  std::string lat_topology = "grid", lat_strategy = "line_sweep", lat_csv;
  auto* lattice = app.add_subcommand("lattice", "sample G_{d,r,omega,p} and label its components");
  lattice->add_option("--d", lat.d)->capture_default_str();
  lattice->add_option("--r", lat.r)->capture_default_str();
  lattice->add_option("--omega", lat.omega)->required();
  lattice->add_option("--n", lat.n)->required();
  lattice->add_option("--p", lat.p)->required();
  lattice->add_option("--topology", lat_topology)->capture_default_str();
  lattice->add_option("--strategy", lat_strategy, "line_sweep or spatial_hash")->capture_default_str();
  lattice->add_option("--csv", lat_csv, "write the labeling of replication 0 (site,root,component_size)");
  add_stochastic(lattice, lat_c, 1);

  // bond
  Common bond_c;
  Coord bond_omega = 1, bond_n = 1;
  double bond_p = 0.0;
  std::string bond_topology = "torus";
  auto* bond = app.add_subcommand("bond", "bond variant: largest component fraction");
  bond->add_option("--omega", bond_omega)->required();
  bond->add_option("--n", bond_n)->required();
  bond->add_option("--p", bond_p)->required();
  bond->add_option("--topology", bond_topology)->capture_default_str();
  add_stochastic(bond, bond_c, 1);

  // pc
  Common pc_c;
  std::string pc_model = "site";
  Coord pc_omega = 1, pc_n = 0;
  int pc_d = 2, pc_r = 1;
  auto* pc = app.add_subcommand("pc", "crossing-point estimate of p_c on the grid");
  pc->add_option("--model", pc_model, "site or bond")->capture_default_str();
  pc->add_option("--omega", pc_omega)->required();
  pc->add_option("--n", pc_n, "side (default 32 omega)");
  pc->add_option("--d", pc_d)->capture_default_str();
  pc->add_option("--r", pc_r)->capture_default_str();
  add_stochastic(pc, pc_c, 100);

  // theta
  Common th_c;
  Coord th_omega = 1, th_window = kDefaultWindow;
  double th_lambda = 1.0;
  std::uint64_t th_k = 1000;
  auto* theta = app.add_subcommand("theta", "P(origin occupied, |C_0| >= K) on a wide torus");
  theta->add_option("--omega", th_omega)->required();
  theta->add_option("--lambda", th_lambda)->required();
  theta->add_option("--K", th_k)->capture_default_str();
  theta->add_option("--window", th_window, "torus side / omega")->capture_default_str();
  add_stochastic(theta, th_c, 10000);

  // phi, phibar
  std::vector<double> phi_mu, phibar_mu;
  auto* phi_cmd = app.add_subcommand("phi", "survival probability of the site branching process");
  phi_cmd->add_option("mu", phi_mu)->required();
  auto* phibar_cmd = app.add_subcommand("phibar", "survival probability of Poisson(mu) branching");
  phibar_cmd->add_option("mu", phibar_mu)->required();

  // brw
  Common brw_c;
  double brw_lambda = 1.0, brw_box = 0.0, brw_side = 0.0;
  WalkCaps brw_caps;
  auto* brw = app.add_subcommand("brw", "survival of the branching random walk");
  brw->add_option("--lambda", brw_lambda)->required();
  brw->add_option("--box", brw_box, "restrict to [-B,B]^2");
  brw->add_option("--side", brw_side, "restrict to [0,C]^2 with a uniform start");
  brw->add_option("--max-pop", brw_caps.max_population)->capture_default_str();
  brw->add_option("--max-gen", brw_caps.max_generations)->capture_default_str();
  add_stochastic(brw, brw_c, 10000);

  // gilbert
  Common gb_c;
  std::string gb_shape = "cube", gb_escape = "censor";
  int gb_d = 2;
  double gb_eps = 0.1, gb_lambda = 0.1;
  TruncationPolicy gb_trunc;
  auto* gilbert = app.add_subcommand("gilbert", "f(lambda) = E|C_0| - 1 for a Gilbert graph");
  gilbert->add_option("--shape", gb_shape, "segment, cube, cross, annulus or facepair")->capture_default_str();
  gilbert->add_option("--d", gb_d, "cube dimension")->capture_default_str();
  gilbert->add_option("--eps", gb_eps)->capture_default_str();
  gilbert->add_option("--lambda", gb_lambda)->required();
  gilbert->add_option("--box", gb_trunc.box_half_width)->capture_default_str();
  gilbert->add_option("--levels", gb_trunc.levels)->capture_default_str();
  gilbert->add_option("--max-component", gb_trunc.max_component)->capture_default_str();
  gilbert->add_option("--escape", gb_escape, "censor or infinite")->capture_default_str();
  add_stochastic(gilbert, gb_c, 100000);

  // root
  Common root_c;
  std::string root_family = "theorem3";
  RootRequest root_req;
  int root_r = 1;
  auto* root = app.add_subcommand("root", "critical constants: theorem3, theoremA, cube, dr");
  root->add_option("--family", root_family)->capture_default_str();
  root->add_option("--d", root_req.d)->capture_default_str();
  root->add_option("--r", root_r, "dr family: subspace dimension")->capture_default_str();
  root->add_option("--target", root_req.target)->capture_default_str();
  root->add_option("--tol", root_req.tol)->capture_default_str();
  root->add_option("--budget", root_req.budget)->capture_default_str();
  add_stochastic(root, root_c, root_req.initial_reps);

  // scan
  double scan_lambda = 1.0, scan_d = 2.0;
  auto* scan = app.add_subcommand("scan", "gap probabilities g and r of a Poisson process on [0,d]");
  scan->add_option("--lambda", scan_lambda)->required();
  scan->add_option("--d", scan_d)->required();

  // opnorm
  double op_lambda = 0.5, op_c = 3.0, op_tol = 1e-6;
  int op_m = 64;
  bool op_solve = false;
  auto* opnorm = app.add_subcommand("opnorm", "norms of T and T2 on [0,C]");
  opnorm->add_option("--lambda", op_lambda)->capture_default_str();
  opnorm->add_option("--C", op_c)->capture_default_str();
  opnorm->add_option("--m", op_m)->capture_default_str();
  opnorm->add_flag("--solve", op_solve, "solve ||T|| = 1 for lambda");
  opnorm->add_option("--tol", op_tol)->capture_default_str();

  // torusz
  Common tz_c;
  double tz_lambda = 1.0, tz_c_len = 4.0, tz_tol = 1e-6;
  bool tz_solve = false;
  auto* torusz = app.add_subcommand("torusz", "reach count Z(lambda, C): simulation and quadrature");
  torusz->add_option("--lambda", tz_lambda)->capture_default_str();
  torusz->add_option("--C", tz_c_len)->capture_default_str();
  torusz->add_flag("--solve", tz_solve, "solve E Z = 1 for lambda");
  torusz->add_option("--tol", tz_tol)->capture_default_str();
  add_stochastic(torusz, tz_c, 100000);

  // sweep
  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep from a JSON config");
  sweep->add_option("config", sweep_config)->required();

  // report
  std::string rep_results, rep_theory, rep_csv;
  double rep_tol = 0.0;
  std::uint64_t rep_seed = 1;
  auto* report_cmd = app.add_subcommand("report", "compare a results file with theory");
  report_cmd->add_option("results", rep_results)->required();
  report_cmd->add_option("--theory", rep_theory, "pc_limit, giant_fraction, theta, bond_fraction, lambda_dr")
      ->required();
  report_cmd->add_option("--tolerance", rep_tol, "per-row tolerance (default depends on theory)");
  report_cmd->add_option("--csv", rep_csv, "also write the table as CSV");
  report_cmd->add_option("--seed", rep_seed, "seed for Monte Carlo theory values")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*lattice) {
      lat.topology = parse_topology(lat_topology);
      lat.validate();
      const Strategy strategy = lat_strategy == "spatial_hash" ? Strategy::spatial_hash
                                : lat_strategy == "line_sweep"  ? Strategy::line_sweep
                                                                : throw PreconditionError("unknown strategy");
      std::printf("rep,sites,components,c1,crossing\n");
      for (std::uint64_t rep = 0; rep < lat_c.reps; ++rep) {
        const std::uint64_t s = substream(lat_c.seed, rep);
        const auto occ = sample_occupied(lat, s);
        const auto lab = components(occ, lat, strategy);
        const auto st = component_stats(lab, lat);
        std::printf("%llu,%zu,%zu,%llu,%d\n", static_cast<unsigned long long>(rep), occ.size(),
                    lab.num_components(), static_cast<unsigned long long>(st.c1), st.crossing_any_axis ? 1 : 0);
        if (rep == 0 && !lat_csv.empty()) {
          std::ofstream out(lat_csv);
          require(out.good(), "cannot write " + lat_csv);
          write_labeling_csv(out, lat, occ.sites, lab);
        }
      }
    } else if (*bond) {
      LatticeSpec spec;
      spec.omega = bond_omega;
      spec.n = bond_n;
      spec.topology = parse_topology(bond_topology);
      spec.validate();
      std::printf("rep,c1,fraction\n");
      for (std::uint64_t rep = 0; rep < bond_c.reps; ++rep) {
        const auto lab = bond_components(spec, bond_p, substream(bond_c.seed, rep));
        std::printf("%llu,%llu,%.6f\n", static_cast<unsigned long long>(rep),
                    static_cast<unsigned long long>(lab.c1),
                    static_cast<double>(lab.c1) / static_cast<double>(bond_n * bond_n));
      }
    } else if (*pc) {
      require(pc_model == "site" || pc_model == "bond", "model must be site or bond");
      const Coord n = pc_n > 0 ? pc_n : 32 * pc_omega;
      const auto rec = estimate_pc(pc_model == "bond" ? PercolationModel::bond : PercolationModel::site, pc_omega, n,
                                   pc_d, pc_r, pc_c.reps, pc_c.seed, pc_c.threads);
      std::printf("%s\n%s\n", csv_header().c_str(), csv_row(rec).c_str());
    } else if (*theta) {
      const auto est = estimate_theta(th_omega, th_lambda, th_k, th_c.reps, th_c.seed, th_window, th_c.threads);
      std::printf("%s\n%s\n", csv_header().c_str(), csv_row(est.raw).c_str());
      print_mean("normalized theta*omega/lambda", est.normalized);
    } else if (*phi_cmd) {
      for (double mu : phi_mu) std::printf("%.12g %.12g\n", mu, phi(mu));
    } else if (*phibar_cmd) {
      for (double mu : phibar_mu) std::printf("%.12g %.12g\n", mu, phi_bar(mu));
    } else if (*brw) {
      require(!(brw_box > 0.0 && brw_side > 0.0), "give at most one of --box and --side");
      MeanEstimate est;
      if (brw_side > 0.0) {
        est = restricted_survival(brw_lambda, brw_side, brw_c.reps, brw_c.seed, brw_caps, brw_c.threads);
      } else {
        WalkConfig cfg;
        cfg.lambda = brw_lambda;
        cfg.caps = brw_caps;
        if (brw_box > 0.0) cfg.restriction = Box::centered(brw_box);
        est = brw_survival_frequency(cfg, brw_c.reps, brw_c.seed, brw_c.threads);
      }
      print_mean("survival", est);
    } else if (*gilbert) {
      GilbertShape shape;
      if (gb_shape == "segment")
        shape = shape::Segment{};
      else if (gb_shape == "cube")
        shape = shape::Cube{gb_d};
      else if (gb_shape == "cross")
        shape = shape::Cross2D{gb_eps};
      else if (gb_shape == "annulus")
        shape = shape::SquareAnnulus{gb_eps};
      else if (gb_shape == "facepair")
        shape = shape::FacePair{};
      else
        throw PreconditionError("unknown shape " + gb_shape);
      require(gb_escape == "censor" || gb_escape == "infinite", "escape must be censor or infinite");
      gb_trunc.escape_action =
          gb_escape == "censor" ? EscapeAction::censor_and_flag : EscapeAction::count_as_infinite;
      const auto f = f_estimate(gb_lambda, shape, gb_trunc, gb_c.reps, gb_c.seed, gb_c.threads);
      std::printf("shape %s lambda %.10g\n", shape_name(shape).c_str(), gb_lambda);
      print_mean("f", f.value);
      std::printf("escape_rate %.3g reliable %s\n", f.escape_rate, f.reliable ? "yes" : "no");
      if (!f.reliable) return 3;
    } else if (*root) {
      if (root_family == "dr") {
        const auto v = lambda_dr(root_req.d, root_r, root_req.tol, root_c.seed, root_c.threads);
        std::printf("lambda_dr(%d,%d) %.12g ci [%.8g, %.8g]%s\n", root_req.d, root_r, v.value, v.ci_low, v.ci_high,
                    v.closed_form ? " closed form" : "");
      } else {
        if (root_family == "theorem3")
          root_req.family = RootFamily::theorem3;
        else if (root_family == "theoremA")
          root_req.family = RootFamily::theoremA;
        else if (root_family == "cube")
          root_req.family = RootFamily::cube_d;
        else
          throw PreconditionError("unknown family " + root_family);
        root_req.seed = root_c.seed;
        root_req.initial_reps = root_c.reps;
        root_req.threads = root_c.threads;
        const auto r = critical_root(root_req);
        std::printf("root %.8g ci [%.8g, %.8g] growths %llu\n", r.root, r.ci_low, r.ci_high,
                    static_cast<unsigned long long>(r.growths));
      }
    } else if (*scan) {
      const auto g = gap_prob(scan_lambda, scan_d);
      std::printf("g %.15g r %.15g\n", g.g, g.r);
    } else if (*opnorm) {
      if (op_solve) {
        const auto c = solve_critical_intensity(CriticalMode::operator_norm, op_c, op_tol, op_m);
        std::printf("lambda_c %.10g evaluations %d\n", c.lambda, c.evaluations);
      } else {
        const auto o = operator_norm(op_lambda, op_c, op_m);
        std::printf("normT %.12g normT2 %.12g normT^2 %.12g product_residual %.3g%s\n", o.normT, o.normT2,
                    o.normT * o.normT, o.product_residual, o.explicit_T2 ? " (explicit T2)" : "");
      }
    } else if (*torusz) {
      if (tz_solve) {
        const auto c = solve_critical_intensity(CriticalMode::torus_meanZ, tz_c_len, tz_tol);
        std::printf("lambda_c %.12g evaluations %d\n", c.lambda, c.evaluations);
      } else {
        const auto q = torus_mean_Z(tz_lambda, tz_c_len);
        const auto sim = torus_reach_Z(tz_lambda, tz_c_len, tz_c.reps, tz_c.seed, tz_c.threads);
        std::printf("quadrature %.10g (without lambda factor %.10g, %d nodes)\n", q.value, q.literal, q.nodes);
        print_mean("simulated", sim.mean);
      }
    } else if (*sweep) {
      const auto s = run_sweep(load_sweep_config(sweep_config));
      std::printf("points %zu computed %zu skipped %zu\n", s.total, s.computed, s.skipped);
    } else if (*report_cmd) {
      const auto t = parse_theory(rep_theory);
      require(t.has_value(), "unknown theory " + rep_theory);
      const double tol = rep_tol > 0.0 ? rep_tol : default_tolerance(*t);
      const auto rows = report(read_results(rep_results), *t, tol, rep_seed);
      write_report_text(std::cout, rows, *t);
      if (!rep_csv.empty()) {
        std::ofstream out(rep_csv);
        require(out.good(), "cannot write " + rep_csv);
        write_report_csv(out, rows, *t);
      }
    }
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const BudgetError& e) {
    std::fprintf(stderr, "error: %s (bracket [%g, %g])\n", e.what(), e.lo(), e.hi());
    return 3;
  } catch (const BracketError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
