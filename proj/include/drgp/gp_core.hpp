#pragma once

#include <functional>

#include "drgp/types.hpp"

namespace drgp {

// Saturation bounds used by every evaluator: exponents are capped before
// exponentiation and row values / jacobian entries are capped afterwards,
// so integrators can probe arbitrarily bad states and still get finite,
// directionally meaningful numbers back.
inline constexpr double kExpArgCap = 500.0;
inline constexpr double kValueCap = 1e100;

double sat_exp(double a);

struct PosyEval {
  double value = 0.0;
  Vec grad;  // d/dr
};

// L(r) = sum_i c_i exp(a_i . r), computed with the largest exponent
// factored out so intermediate terms stay in range.
PosyEval posy_value(const Mat& A, const Vec& c, const Vec& r);

struct SqrtQuadEval {
  double value = 0.0;
  Vec grad_r;
  double grad_shift = 0.0;
};

// S(r, shift) = exp(shift/2) * sqrt(E^T Sigma E) with E_i = exp(a_i . r).
// A zero quadratic form yields value 0 with zero gradients.
SqrtQuadEval sqrt_quad(const Mat& A, const Mat& Sigma, const Vec& r,
                       double shift);

// Deterministic posynomial row value at positive t (no log transform).
double posy_at(const PosynomialBlock& b, const Vec& t, const Vec& coeffs);

Vec log_point(const Vec& t);
Vec exp_point(const Vec& r);

// Central finite differences with per-coordinate step h*max(1,|u_i|).
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& u,
                double h = 1e-6);
Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& u,
                double h = 1e-6);

struct FdCheck {
  double max_rel_err = 0.0;  // max over rows of ||row_a - row_fd|| / max(1, ||row_fd||)
};

FdCheck finite_diff_check(const std::function<Vec(const Vec&)>& g,
                          const std::function<Mat(const Vec&)>& jac,
                          const Vec& u, double h = 1e-6);

}  // namespace drgp
