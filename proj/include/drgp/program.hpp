#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "drgp/types.hpp"

namespace drgp {

enum class Convexity { Convex, Biconvex };

struct Slice {
  int off = 0;
  int len = 0;
  bool empty() const { return len == 0; }
};

// Where each variable family lives inside the flat state vector.
// r: log design variables; x: log per-row probabilities (independent forms);
// y: untransformed margins (dependent forms, trailing block when biconvex);
// lam/beta/pi: transformed dual variables of the support-only reformulations.
struct VariableLayout {
  Slice r, x, y, lam, beta, pi;
  int n = 0;
};

enum class RowKind : std::uint8_t {
  Robust,     // moment-backed constraint row
  Coupling,   // joint probability budget
  Sign,       // x_k <= 0
  Upper,      // y_k - 1 <= 0
  Lower,      // -y_k <= 0
  DualCone,   // lam_k <= 0
  DualOrder,  // lam_k - pi_k <= 0
  Link,       // pi_k + a_i . r - beta_i <= 0
  Certain,    // deterministic posynomial row
};

// Smooth inequality-constrained program  min f(u) s.t. g(u) <= 0.
// Evaluators clamp the query point into [guard_lo, guard_hi] first, so
// callers may probe outside the guarded region safely; `clamped` reports
// when that happened.
struct SmoothProgram {
  VariableLayout layout;
  int n = 0;
  int n_g = 0;
  Convexity convexity = Convexity::Convex;
  int z_dim = 0;  // biconvex: leading convex block, else n
  int y_dim = 0;  // biconvex: trailing margin block, else 0
  std::vector<RowKind> rows;
  InstanceParameter theta;
  Vec guard_lo, guard_hi;
  Vec start;

  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad_f;
  std::function<void(const Vec&, Vec&, Mat*, bool*)> eval;

  // Exact elimination of the dual z block at fixed margins, attached by
  // builders whose structure admits one. z_reduce(y) returns a program over
  // the design variables alone; z_lift(y, zr, gr, z, gamma) expands a
  // solution of that program back to the full z block and row multipliers
  // (margin-only rows get zero weight). Both empty when no reduction exists.
  std::function<SmoothProgram(const Vec&)> z_reduce;
  std::function<void(const Vec&, const Vec&, const Vec&, Vec&, Vec&)> z_lift;

  Vec clamp(const Vec& u) const;
  Vec g(const Vec& u) const;
  Mat jac_g(const Vec& u) const;
  void g_and_jac(const Vec& u, Vec& gv, Mat& J) const;
};

}  // namespace drgp
