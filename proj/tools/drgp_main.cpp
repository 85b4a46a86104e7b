#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drgp/bench.hpp"
#include "drgp/car.hpp"
#include "drgp/duplex.hpp"
#include "drgp/neuro_ode.hpp"
#include "drgp/reformulate.hpp"
#include "drgp/robustness.hpp"

using namespace drgp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolveFailure = 1;
constexpr int kExitBadInput = 2;

struct ProblemArgs {
  std::string file;
  std::string family;  // box3d | shape | sinr
  int m = 5;
  int k = 5;
  double eps = -1.0;
  std::string coupling = "independent";
  std::string kind = "two-moment";
  std::uint64_t seed = 0;
};

void add_problem_options(CLI::App* cmd, ProblemArgs& a) {
  cmd->add_option("--problem", a.file, "problem JSON file");
  cmd->add_option("--family", a.family,
                  "generated family: box3d, shape or sinr");
  cmd->add_option("--m", a.m, "shape: number of design variables");
  cmd->add_option("--k", a.k, "sinr: number of links");
  cmd->add_option("--eps", a.eps, "risk level");
  cmd->add_option("--coupling", a.coupling,
                  "independent, dependent or individual");
  cmd->add_option("--kind", a.kind, "two-moment or nonneg-support");
  cmd->add_option("--instance-seed", a.seed, "generator seed");
}

Coupling parse_coupling(const std::string& s) {
  if (s == "independent") return Coupling::Independent;
  if (s == "dependent") return Coupling::Dependent;
  if (s == "individual") return Coupling::Individual;
  throw CLI::ValidationError("--coupling", "unknown coupling " + s);
}

AmbiguityKind parse_kind(const std::string& s) {
  if (s == "two-moment") return AmbiguityKind::TwoMoment;
  if (s == "nonneg-support") return AmbiguityKind::NonnegSupport;
  throw CLI::ValidationError("--kind", "unknown ambiguity kind " + s);
}

RobustGP resolve_problem(const ProblemArgs& a) {
  if (!a.file.empty()) return load_gp(a.file);
  if (a.family == "box3d")
    return make_box3d(a.eps > 0 ? a.eps : 0.05, parse_coupling(a.coupling),
                      parse_kind(a.kind));
  if (a.family == "shape") {
    const AmbiguityKind kind = parse_kind(a.kind);
    const double de = kind == AmbiguityKind::TwoMoment ? 0.15 : 0.2;
    return make_multishape(a.m, kind, parse_coupling(a.coupling),
                           a.eps > 0 ? a.eps : de, a.seed);
  }
  if (a.family == "sinr")
    return make_sinr(a.k, parse_coupling(a.coupling),
                     a.eps > 0 ? a.eps : 0.2, a.seed);
  throw CLI::ValidationError("--family",
                             "need --problem or --family box3d|shape|sinr");
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

Vec design_point(const SmoothProgram& sp, const Vec& state) {
  return state.head(sp.layout.r.len).array().exp();
}

int run_solve(const ProblemArgs& pa, const IntegratorConfig& cfg,
              const DuplexConfig& dcfg, const std::string& traj,
              const std::string& out) {
  const RobustGP gp = resolve_problem(pa);
  const SmoothProgram sp = build(gp);

  double objective = 0.0, kkt = 0.0;
  bool ok = false;
  Vec primal;

  if (sp.convexity == Convexity::Convex) {
    const SolveReport rep = solve(sp, cfg, !traj.empty());
    objective = rep.objective;
    kkt = rep.kkt;
    ok = rep.converged;
    primal = rep.state.z;
    if (!traj.empty()) write_trajectory_csv(rep, traj);
    std::cout << "status " << (ok ? "converged" : "not-converged") << "\n"
              << "objective " << objective << "\n"
              << "kkt_residual " << kkt << "\n"
              << "field_evals " << rep.field_evals << "\n";
  } else {
    const DuplexReport rep = solve_duplex(sp, dcfg);
    objective = rep.objective;
    kkt = rep.kkt;
    ok = rep.feasible;
    primal.resize(sp.z_dim + sp.y_dim);
    primal << rep.state.z, rep.state.y;
    if (!traj.empty()) write_iteration_csv(rep, traj);
    std::cout << "status " << (ok ? "feasible" : "no-feasible-point") << "\n"
              << "objective " << objective << "\n"
              << "kkt_residual " << kkt << "\n"
              << "iterations " << rep.iterations << "\n"
              << "field_evals " << rep.field_evals << "\n";
  }

  if (ok) {
    const Vec t = primal.head(sp.layout.r.len).array().exp();
    std::cout << "design";
    for (int i = 0; i < t.size(); ++i) std::cout << " " << t[i];
    std::cout << "\n";
  }
  if (!out.empty()) save_gp(gp, out);
  return ok ? kExitOk : kExitSolveFailure;
}

int run_bench(const std::string& suite, const std::string& out_csv,
              const IntegratorConfig& cfg, DuplexConfig dcfg,
              std::uint64_t seed, int threads) {
  ReportTable table;
  ScenarioConfig scen;
  scen.seed = seed;
  scen.threads = threads;

  auto push = [&](const std::string& label, const RobustGP& gp) {
    const double t0 = now_seconds();
    const SmoothProgram sp = build(gp);
    ReportRow row;
    row.label = label;
    row.eps = gp.epsilon;
    if (sp.convexity == Convexity::Convex) {
      const SolveReport rep = solve(sp, cfg);
      row.objective = rep.objective;
      row.kkt = rep.kkt;
      row.converged = rep.converged;
      if (rep.converged) {
        const RobustnessReport rr =
            count_violations(gp, design_point(sp, rep.state.z), scen);
        int worst = 0;
        for (const auto& r : rr.rows) worst = std::max(worst, r.violations);
        row.violations = worst;
      }
    } else {
      const DuplexReport rep = solve_duplex(sp, dcfg);
      row.objective = rep.objective;
      row.kkt = rep.kkt;
      row.converged = rep.feasible;
      if (rep.feasible) {
        const RobustnessReport rr =
            count_violations(gp, design_point(sp, rep.state.z), scen);
        int worst = 0;
        for (const auto& r : rr.rows) worst = std::max(worst, r.violations);
        row.violations = worst;
      }
    }
    row.seconds = now_seconds() - t0;
    table.rows.push_back(row);
    std::cout << row.label << " objective " << row.objective << " kkt "
              << row.kkt << (row.converged ? "" : " (not converged)") << "\n";
  };

  bool any_failed = false;
  if (suite == "box3d") {
    for (const double eps : {0.05, 0.10, 0.15, 0.20}) {
      push("box3d-ind-eps" + std::to_string(eps).substr(0, 4),
           make_box3d(eps, Coupling::Independent));
      push("box3d-dep-eps" + std::to_string(eps).substr(0, 4),
           make_box3d(eps, Coupling::Dependent));
    }
  } else if (suite == "shape") {
    for (const int m : {3, 5, 10}) {
      push("shape-m" + std::to_string(m) + "-ind",
           make_multishape(m, AmbiguityKind::TwoMoment, Coupling::Independent,
                           0.15, seed));
      push("shape-m" + std::to_string(m) + "-dep",
           make_multishape(m, AmbiguityKind::TwoMoment, Coupling::Dependent,
                           0.15, seed));
    }
  } else if (suite == "sinr") {
    for (const int k : {5, 10}) {
      push("sinr-k" + std::to_string(k) + "-individual",
           make_sinr(k, Coupling::Individual, 0.2, seed));
      push("sinr-k" + std::to_string(k) + "-joint",
           make_sinr(k, Coupling::Dependent, 0.2, seed));
    }
  } else {
    throw CLI::ValidationError("--suite", "unknown suite " + suite);
  }

  for (const auto& r : table.rows) any_failed = any_failed || !r.converged;
  if (!out_csv.empty()) write_report_csv(table, out_csv);
  return any_failed ? kExitSolveFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributionally robust geometric program solver"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "random seed shared by stochastic pieces");
  app.add_option("--threads", threads, "worker threads for scenario checks");

  IntegratorConfig icfg;
  app.add_option("--kappa", icfg.kappa, "network timescale");
  app.add_option("--abs-tol", icfg.abs_tol, "integration absolute tolerance");
  app.add_option("--rel-tol", icfg.rel_tol, "integration relative tolerance");
  app.add_option("--eq-tol", icfg.equilibrium_tol, "equilibrium tolerance");
  app.add_option("--max-time", icfg.max_time, "integration horizon in kappa units");

  // solve
  ProblemArgs pa;
  std::string traj, out_json;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one instance");
  add_problem_options(solve_cmd, pa);
  solve_cmd->add_option("--trajectory", traj,
                        "CSV capture: state trajectory (convex) or outer "
                        "iterations (biconvex)");
  solve_cmd->add_option("--save-problem", out_json,
                        "write the instance as JSON");

  // bench
  std::string suite = "box3d", bench_csv;
  CLI::App* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
  bench_cmd->add_option("--suite", suite, "box3d, shape or sinr");
  bench_cmd->add_option("--out", bench_csv, "write a CSV report table");

  // robustness
  ProblemArgs ra;
  int n_scen = 100;
  std::string rob_csv;
  CLI::App* rob_cmd =
      app.add_subcommand("robustness", "scenario violation counts");
  add_problem_options(rob_cmd, ra);
  rob_cmd->add_option("--scenarios", n_scen, "scenario count per family");
  rob_cmd->add_option("--out", rob_csv, "write the counts as CSV");

  // compare
  ProblemArgs ca;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "duplex network against the alternation baseline");
  add_problem_options(cmp_cmd, ca);

  // batch
  std::vector<std::string> batch_files;
  bool cold = false;
  CLI::App* batch_cmd =
      app.add_subcommand("batch", "solve many instances with warm starts");
  batch_cmd->add_option("--problems", batch_files, "problem JSON files")
      ->required();
  batch_cmd->add_flag("--cold", cold, "disable warm starting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  DuplexConfig dcfg;
  dcfg.seed = seed;

  try {
    if (solve_cmd->parsed()) return run_solve(pa, icfg, dcfg, traj, out_json);

    if (bench_cmd->parsed())
      return run_bench(suite, bench_csv, icfg, dcfg, seed, threads);

    if (rob_cmd->parsed()) {
      const RobustGP gp = resolve_problem(ra);
      const SmoothProgram sp = build(gp);
      Vec design;
      if (sp.convexity == Convexity::Convex) {
        const SolveReport rep = solve(sp, icfg);
        if (!rep.converged) return kExitSolveFailure;
        design = design_point(sp, rep.state.z);
      } else {
        const DuplexReport rep = solve_duplex(sp, dcfg);
        if (!rep.feasible) return kExitSolveFailure;
        design = design_point(sp, rep.state.z);
      }
      ScenarioConfig scen;
      scen.seed = seed;
      scen.threads = threads;
      scen.n_scenarios = n_scen;
      const RobustnessReport rep = count_violations(gp, design, scen);
      std::cout << "distribution violations rate\n";
      for (const auto& r : rep.rows)
        std::cout << to_string(r.dist) << " " << r.violations << " " << r.rate
                  << (r.truncated ? " (truncated)" : "") << "\n";
      if (!rob_csv.empty()) write_robustness_csv(rep, rob_csv);
      return kExitOk;
    }

    if (cmp_cmd->parsed()) {
      const RobustGP gp = resolve_problem(ca);
      const SmoothProgram sp = build(gp);
      if (sp.convexity != Convexity::Biconvex) {
        std::cerr << "compare needs a dependent-coupling instance\n";
        return kExitBadInput;
      }
      const DuplexReport dup = solve_duplex(sp, dcfg);
      CarConfig ccfg;
      ccfg.inner = icfg;
      const CarReport car = car_solve(sp, ccfg);
      std::cout << "duplex " << dup.objective << "\n"
                << "alternation " << car.objective << "\n"
                << "gap " << gap(car.objective, dup.objective) << "\n";
      return dup.feasible && car.converged ? kExitOk : kExitSolveFailure;
    }

    if (batch_cmd->parsed()) {
      std::vector<RobustGP> gps;
      for (const auto& f : batch_files) gps.push_back(load_gp(f));
      const auto reps = solve_batch(gps, icfg, !cold);
      bool ok = true;
      for (std::size_t i = 0; i < reps.size(); ++i) {
        std::cout << batch_files[i] << " objective " << reps[i].objective
                  << " kkt " << reps[i].kkt << " evals "
                  << reps[i].field_evals << "\n";
        ok = ok && reps[i].converged;
      }
      return ok ? kExitOk : kExitSolveFailure;
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolveFailure;
  }
  return kExitBadInput;
}
