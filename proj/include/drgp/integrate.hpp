#pragma once

#include <functional>
#include <vector>

#include "drgp/types.hpp"

namespace drgp {

enum class StopReason { Equilibrium, MaxTime, MaxSteps, StepUnderflow };

struct OdeOptions {
  double t_end = 3e4;
  double h0 = 1e-4;
  double h_max = 0.1;
  double h_min = 1e-14;
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  double equilibrium_tol = 1e-6;
  long max_steps = 8000000;
  int max_samples = 1000;
};

struct OdeSample {
  double t;
  Vec state;
};

struct OdeResult {
  Vec state;
  double t = 0.0;
  StopReason reason = StopReason::MaxTime;
  long accepted = 0;
  long rejected = 0;
  long nfev = 0;
  std::vector<OdeSample> samples;
};

// Field fills dsdt (already divided by the timescales) and reports the
// max-norm of the unscaled drive, which the equilibrium test uses.
using Field = std::function<void(const Vec&, Vec&, double&)>;
using Project = std::function<void(Vec&)>;

// Dormand-Prince 5(4) with PI step control. The projection runs after every
// accepted step, which invalidates the FSAL property, so the first stage is
// recomputed each step; the equilibrium test happens there, at an accepted
// state. Sample thinning keeps at most max_samples states by doubling the
// record stride.
OdeResult integrate_ode(const Field& field, const Project& project,
                        const Vec& s0, const OdeOptions& opt);

}  // namespace drgp
