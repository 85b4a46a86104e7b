#pragma once

#include "drgp/neuro_ode.hpp"
#include "drgp/program.hpp"

namespace drgp {

struct CarConfig {
  int max_rounds = 30;
  double round_tol = 1e-6;
  IntegratorConfig inner;
};

struct CarReport {
  Vec z, y;
  double objective = 0.0;
  double max_violation = 0.0;
  int rounds = 0;
  bool converged = false;
  bool flagged = false;
  std::vector<double> objective_per_round;
};

// Coordinate alternation on a biconvex program: each round resolves the z
// block with the margins frozen, then recenters the margins by minimizing
// the worst row over the y box (the rows are affine in y at fixed z). The
// margin-only rows belong to the y step, so the z subproblem sees only the
// rows its variables can move. If that subproblem comes back infeasible the
// report is flagged and the margins are reset to the box center once before
// the solve gives up. The two-argument form starts from the box center.
CarReport car_solve(const SmoothProgram& sp, const Vec& y0,
                    const CarConfig& cfg);
CarReport car_solve(const SmoothProgram& sp, const CarConfig& cfg);

// (reference - candidate) / reference
double gap(double reference_obj, double candidate_obj);

}  // namespace drgp
