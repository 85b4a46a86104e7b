#pragma once

#include "drgp/program.hpp"

namespace drgp {

// Two-moment ambiguity, product coupling. Variables (r, x) with x_k the log
// of the k-th row probability. Rows: K robust rows, the coupling row
// log(1-eps) - sum x, K sign rows x_k <= 0, then certain rows.
// Coupling::Individual drops the x block and pins every row at 1 - eps.
SmoothProgram build_two_moment_ind(const RobustGP& gp);

// Two-moment ambiguity, shared margins. Variables (r, y), y untransformed.
// Rows: K robust rows, (K - eps) - sum y, K rows y_k - 1, then certain.
// Convex for eps <= 1/2; y is guarded inside [1-eps-1e-6, 1-1e-9].
SmoothProgram build_two_moment_dep(const RobustGP& gp);

// Support-only ambiguity, product coupling. Variables (r, x, lam, beta, pi).
// Rows: coupling, K sign rows, K moment rows, K dual cone rows, K dual
// order rows, one link row per (term, row), then certain rows.
SmoothProgram build_ns_ind(const RobustGP& gp);

// Support-only ambiguity, shared margins. Biconvex: z = (r, lam, beta, pi)
// and a trailing y block. Rows: coupling, K lower rows, K upper rows,
// K moment rows, K dual cone, K dual order, link rows, certain rows.
SmoothProgram build_ns_dep(const RobustGP& gp);

// Dispatch on ambiguity kind and coupling.
SmoothProgram build(const RobustGP& gp);

// Freeze the trailing margin block of a biconvex program, leaving a convex
// program over z alone. Row count and ordering are preserved.
SmoothProgram restrict_y(const SmoothProgram& sp, const Vec& y_fix);

}  // namespace drgp
