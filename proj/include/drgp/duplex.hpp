#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "drgp/integrate.hpp"
#include "drgp/neuro_ode.hpp"
#include "drgp/program.hpp"

namespace drgp {

struct DuplexState {
  Vec z;
  Vec y;
  Vec omega;
};

struct PsoParams {
  double w = 0.7298;
  double c1 = 1.49618;
  double c2 = 1.49618;
};

struct Bounds {
  Vec lo, hi;
};

struct DuplexConfig {
  double ratio1 = 0.1;   // kappa_z / kappa_y for the fast-z member
  double ratio2 = 10.0;  // for the slow-z member
  double kappa = 1.0;    // shared base timescale of the y/omega dynamics
  PsoParams pso;
  int swarm = 2;
  int iterations = 40;
  double zeta = 1e-4;  // diversity threshold and outer termination tolerance
  std::uint64_t seed = 0;
  double feas_tol = 1e-6;
  double rho = 5.0;           // penalty weight inside the activation
  double member_time = 400.0; // integration horizon per member, in t units
  IntegratorConfig inner;
  std::optional<Bounds> bounds;  // over (z, y, omega); defaults from layout
  bool polish = true;
};

struct IterationRow {
  int j;
  double best_fitness;
  double diversity;
  bool mutated;
};

struct DuplexReport {
  DuplexState state;        // best equilibrium found
  Vec best_position;        // the initial condition that produced it
  double objective = 0.0;
  double kkt = 0.0;
  bool feasible = false;
  int iterations = 0;
  bool terminated_early = false;
  std::vector<double> best_so_far;  // per outer iteration, +inf until feasible
  std::vector<IterationRow> log;
  long field_evals = 0;
};

// kappa1 dz/dt = -(grad f + Jz^T (omega+rho g)_+),
// kappa2 dy/dt = -Jy^T (omega+rho g)_+, kappa2 domega/dt = -omega + (omega+rho g)_+.
// Equilibria coincide with KKT points of the biconvex program for any rho > 0;
// rho > 1 damps the multiplier oscillation around active constraints.
void duplex_field(const SmoothProgram& sp, const DuplexState& s, double kappa1,
                  double kappa2, Vec& dz, Vec& dy, Vec& domega, double rho = 1.0);

// Stationarity of the full biconvex program at (z, y) with multipliers omega.
double duplex_kkt_residual(const SmoothProgram& sp, const DuplexState& s);

Bounds default_bounds(const SmoothProgram& sp);

// One network run: integrate the coupled dynamics from an initial state until
// they settle, then score the rest point.
struct MemberOutcome {
  DuplexState state;
  double fitness = std::numeric_limits<double>::infinity();
  bool converged = false;  // dynamics reached an accepted equilibrium
  long field_evals = 0;
};

// Two particles integrated side by side, the first on the fast-z ratio and the
// second on the slow-z ratio. A run that never settles scores +inf.
struct PairOutcome {
  MemberOutcome m1, m2;
};
PairOutcome run_rnn_pair(const SmoothProgram& sp, const DuplexState& p1,
                         const DuplexState& p2, const DuplexConfig& cfg);

void pso_update(Vec& pos, Vec& vel, const Vec& pbest, const Vec& gbest,
                const PsoParams& p, double r1, double r2);

double swarm_diversity(const std::vector<Vec>& positions, const Vec& gbest);

// Wavelet mutation: one amplitude per particle, applied to every component,
// position clamped back into the bounds afterwards.
double wavelet_amplitude(double phi, double a);
void wavelet_mutate(Vec& pos, const Bounds& b, int j, int T,
                    std::mt19937_64& rng);

DuplexReport solve_duplex(const SmoothProgram& sp, const DuplexConfig& cfg);

void write_iteration_csv(const DuplexReport& rep, const std::string& path);

}  // namespace drgp
