#include "drgp/gp_core.hpp"

#include <algorithm>
#include <cmath>

namespace drgp {

double sat_exp(double a) { return std::exp(std::min(a, kExpArgCap)); }

namespace {

double clip(double v) {
  return std::min(std::max(v, -kValueCap), kValueCap);
}

void clip_all(Vec& v) {
  for (int i = 0; i < v.size(); ++i) v[i] = clip(v[i]);
}

}  // namespace

PosyEval posy_value(const Mat& A, const Vec& c, const Vec& r) {
  PosyEval out;
  const Vec w = A * r;
  const double mx = w.maxCoeff();
  const double sc = sat_exp(mx);
  const Vec e = (w.array() - mx).exp();  // entries in (0, 1]
  const Vec ce = c.cwiseProduct(e);
  out.value = clip(sc * ce.sum());
  out.grad = sc * (A.transpose() * ce);
  clip_all(out.grad);
  return out;
}

SqrtQuadEval sqrt_quad(const Mat& A, const Mat& Sigma, const Vec& r,
                       double shift) {
  SqrtQuadEval out;
  out.grad_r = Vec::Zero(r.size());
  const Vec w = A * r;
  const double mx = w.maxCoeff();
  const Vec e = (w.array() - mx).exp();
  const Vec v = Sigma * e;
  const double q = std::max(0.0, e.dot(v));
  const double root = std::sqrt(q);
  if (root <= 1e-150) return out;  // flat in every direction
  const double sc = sat_exp(mx + 0.5 * shift);
  out.value = clip(sc * root);
  out.grad_r = (sc / root) * (A.transpose() * e.cwiseProduct(v));
  clip_all(out.grad_r);
  out.grad_shift = 0.5 * out.value;
  return out;
}

double posy_at(const PosynomialBlock& b, const Vec& t, const Vec& coeffs) {
  double s = 0.0;
  for (int i = 0; i < b.terms(); ++i) {
    double mono = 1.0;
    for (int j = 0; j < b.vars(); ++j) {
      const double a = b.exponents(i, j);
      if (a != 0.0) mono *= std::pow(t[j], a);
    }
    s += coeffs[i] * mono;
  }
  return s;
}

Vec log_point(const Vec& t) { return t.array().log(); }
Vec exp_point(const Vec& r) { return r.array().exp(); }

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& u,
                double h) {
  Vec g(u.size());
  Vec p = u;
  for (int i = 0; i < u.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(u[i]));
    p[i] = u[i] + hi;
    const double fp = f(p);
    p[i] = u[i] - hi;
    const double fm = f(p);
    p[i] = u[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& u,
                double h) {
  Vec p = u;
  const Vec g0 = g(u);
  Mat J(g0.size(), u.size());
  for (int i = 0; i < u.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(u[i]));
    p[i] = u[i] + hi;
    const Vec gp = g(p);
    p[i] = u[i] - hi;
    const Vec gm = g(p);
    p[i] = u[i];
    J.col(i) = (gp - gm) / (2.0 * hi);
  }
  return J;
}

FdCheck finite_diff_check(const std::function<Vec(const Vec&)>& g,
                          const std::function<Mat(const Vec&)>& jac,
                          const Vec& u, double h) {
  FdCheck c;
  const Mat Ja = jac(u);
  const Mat Jf = fd_jacobian(g, u, h);
  for (int i = 0; i < Ja.rows(); ++i) {
    const double denom = std::max(1.0, Jf.row(i).norm());
    c.max_rel_err =
        std::max(c.max_rel_err, (Ja.row(i) - Jf.row(i)).norm() / denom);
  }
  return c;
}

}  // namespace drgp
