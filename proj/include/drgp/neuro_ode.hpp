#pragma once

#include <string>
#include <vector>

#include "drgp/integrate.hpp"
#include "drgp/program.hpp"

namespace drgp {

struct NeuroState {
  Vec z;
  Vec gamma;
};

struct IntegratorConfig {
  double kappa = 1.0;
  // Step error must sit well below the equilibrium test or the accepted
  // states jitter around the rest point without ever passing it.
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  double equilibrium_tol = 1e-6;
  double max_time = 3e4;  // in units of kappa
  long max_steps = 8000000;
};

struct TrajectorySample {
  double t;
  double f;
  double kkt;
  Vec state;  // z then gamma
};

struct SolveReport {
  NeuroState state;
  double objective = 0.0;
  double kkt = 0.0;
  bool converged = false;
  StopReason reason = StopReason::MaxTime;
  long field_evals = 0;
  long accepted = 0;
  long rejected = 0;
  double t_end = 0.0;
  std::vector<TrajectorySample> trajectory;
};

// kappa dz/dt = -(grad f + J^T (gamma + g)_+), kappa dgamma/dt = -gamma + (gamma + g)_+.
void vector_field(const SmoothProgram& sp, const NeuroState& s, Vec& dz,
                  Vec& dgamma);

double kkt_residual(const SmoothProgram& sp, const NeuroState& s);

NeuroState default_state(const SmoothProgram& sp);

SolveReport integrate_to_equilibrium(const SmoothProgram& sp,
                                     const NeuroState& s0,
                                     const IntegratorConfig& cfg,
                                     bool record_trajectory = false);

SolveReport solve(const SmoothProgram& sp, const IntegratorConfig& cfg,
                  bool record_trajectory = false);

// integrate_to_equilibrium with a tail accelerator. A first pass runs at a
// loose equilibrium tolerance until the activation pattern settles, a damped
// Newton step on the active rows jumps through the slow multiplier ramp, and
// a second pass certifies the landing point against the requested tolerance.
// When the jump does not certify, the second pass simply keeps integrating,
// so the result is always an integrator-accepted state.
SolveReport accelerated_solve(const SmoothProgram& sp, const NeuroState& s0,
                              const IntegratorConfig& cfg);

// Solves a batch, reusing work across instances: an instance whose
// parameter vector matches an earlier one exactly gets a copy of that
// report; otherwise the nearest earlier solution (parameter distance)
// seeds the integration.
std::vector<SolveReport> solve_batch(const std::vector<RobustGP>& gps,
                                     const IntegratorConfig& cfg,
                                     bool warm_start = true);

// Columns: t, f, kkt_residual, then the state components.
void write_trajectory_csv(const SolveReport& rep, const std::string& path);

}  // namespace drgp
