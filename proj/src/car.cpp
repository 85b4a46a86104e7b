#include "drgp/car.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drgp/duplex.hpp"
#include "drgp/reformulate.hpp"

namespace drgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimize the worst row over the margin box at fixed z. The rows are
// affine in y: each touches at most one margin with positive slope (a
// private upper bound once the level is fixed) or only nonpositive slopes
// (checked at the componentwise upper corner). Bisection on the level.
Vec margin_step(const SmoothProgram& sp, const Vec& z, const Vec& lo,
                const Vec& hi) {
  const int zd = sp.z_dim, yd = sp.y_dim, ng = sp.n_g;
  Vec w(zd + yd);
  w.head(zd) = z;

  // Probe the affine coefficients from points inside the margin box; the
  // evaluator clamps margins onto its guard box, so probing at 0 and the
  // unit vectors would measure the clamp instead of the row.
  w.tail(yd) = lo;
  Vec gb;
  sp.eval(w, gb, nullptr, nullptr);
  Mat S(ng, yd);
  for (int k = 0; k < yd; ++k) {
    w.tail(yd) = lo;
    w[zd + k] = hi[k];
    Vec gk;
    sp.eval(w, gk, nullptr, nullptr);
    S.col(k) = (gk - gb) / (hi[k] - lo[k]);
  }
  const Vec g0 = gb - S * lo;

  std::vector<int> pos_var(ng, -1), neg_var(ng, -1);
  std::vector<bool> is_const(ng, true), multi_neg(ng, false);
  for (int i = 0; i < ng; ++i) {
    int npos = 0, nneg = 0, nnz = 0;
    for (int k = 0; k < yd; ++k) {
      const double s = S(i, k);
      if (std::abs(s) < 1e-12) continue;
      ++nnz;
      if (s > 0) {
        ++npos;
        pos_var[i] = k;
      } else {
        ++nneg;
        neg_var[i] = k;
      }
    }
    is_const[i] = nnz == 0;
    if (npos > 0 && (npos > 1 || nneg > 0))
      throw std::invalid_argument("margin step: row couples margins with mixed signs");
    multi_neg[i] = npos == 0 && nneg > 1;
  }

  Vec u(yd), l(yd);
  auto feasible = [&](double s) {
    u = hi;
    l = lo;
    for (int i = 0; i < ng; ++i) {
      if (is_const[i]) {
        if (g0[i] > s) return false;
        continue;
      }
      if (pos_var[i] >= 0) {
        const int k = pos_var[i];
        u[k] = std::min(u[k], (s - g0[i]) / S(i, k));
      } else if (!multi_neg[i]) {
        const int k = neg_var[i];
        l[k] = std::max(l[k], (g0[i] - s) / (-S(i, k)));
      }
    }
    for (int k = 0; k < yd; ++k)
      if (l[k] > u[k]) return false;
    for (int i = 0; i < ng; ++i)
      if (multi_neg[i] && g0[i] + S.row(i).dot(u) > s) return false;
    return true;
  };

  double s_hi = 1.0;
  int grow = 0;
  while (!feasible(s_hi) && grow++ < 80) s_hi *= 2.0;
  if (!feasible(s_hi))
    throw std::runtime_error("margin step: no finite minimax level");
  double s_lo = s_hi - 1.0;
  double gap_w = 1.0;
  while (feasible(s_lo) && grow++ < 200) {
    s_hi = s_lo;
    gap_w *= 2.0;
    s_lo -= gap_w;
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (s_lo + s_hi);
    (feasible(mid) ? s_hi : s_lo) = mid;
  }

  feasible(s_hi + 1e-12);
  Vec y = u.cwiseMax(lo).cwiseMin(hi);
  return y;
}

}  // namespace

CarReport car_solve(const SmoothProgram& sp, const Vec& y0,
                    const CarConfig& cfg) {
  if (sp.convexity != Convexity::Biconvex)
    throw std::invalid_argument("the alternation baseline needs a biconvex program");
  const int zd = sp.z_dim, yd = sp.y_dim;
  if (y0.size() != yd)
    throw std::invalid_argument("margin start length mismatch");

  const Bounds b = default_bounds(sp);
  const Vec ylo = b.lo.segment(zd, yd), yhi = b.hi.segment(zd, yd);
  constexpr double kZFeasTol = 1e-6;

  CarReport rep;
  Vec y = y0.cwiseMax(ylo).cwiseMin(yhi);
  Vec z = sp.start.head(zd);
  Vec gamma = Vec::Zero(sp.n_g);
  NeuroState rs;
  bool have_rs = false;
  bool reinit_used = false;
  double prev = kInf;

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    // z block at frozen margins. The reduced form carries only the rows the
    // z variables can move, which is also the right scope for judging
    // whether the margins left the subproblem solvable at all.
    for (;;) {
      double viol;
      if (sp.z_reduce) {
        SmoothProgram sm = sp.z_reduce(y);
        NeuroState s0 =
            have_rs ? rs : NeuroState{sm.start, Vec::Zero(sm.n_g)};
        SolveReport sol = accelerated_solve(sm, s0, cfg.inner);
        Vec gsm;
        sm.eval(sol.state.z, gsm, nullptr, nullptr);
        viol = gsm.maxCoeff();
        if (viol <= kZFeasTol) {
          rs = sol.state;
          have_rs = true;
          sp.z_lift(y, sol.state.z, sol.state.gamma, z, gamma);
          break;
        }
      } else {
        SmoothProgram rz = restrict_y(sp, y);
        SolveReport sol = accelerated_solve(rz, NeuroState{z, gamma}, cfg.inner);
        Vec gr;
        Mat Jr;
        rz.eval(sol.state.z, gr, &Jr, nullptr);
        viol = 0.0;
        for (int i = 0; i < rz.n_g; ++i)
          if (Jr.row(i).lpNorm<Eigen::Infinity>() > 0.0)
            viol = std::max(viol, gr[i]);
        if (viol <= kZFeasTol) {
          z = sol.state.z;
          gamma = sol.state.gamma;
          break;
        }
      }
      rep.flagged = true;
      if (reinit_used)
        throw std::runtime_error("z subproblem infeasible after margin reset");
      reinit_used = true;
      y = 0.5 * (ylo + yhi);
      have_rs = false;
    }

    y = margin_step(sp, z, ylo, yhi);

    rep.rounds = round;
    Vec w(zd + yd);
    w << z, y;
    const double obj = sp.f(w);
    rep.objective_per_round.push_back(obj);
    if (std::abs(obj - prev) <= cfg.round_tol * std::max(1.0, std::abs(obj))) {
      rep.converged = true;
      prev = obj;
      break;
    }
    prev = obj;
  }

  rep.z = z;
  rep.y = y;
  Vec w(zd + yd);
  w << z, y;
  rep.objective = sp.f(w);
  Vec g;
  sp.eval(w, g, nullptr, nullptr);
  rep.max_violation = g.maxCoeff();
  return rep;
}

CarReport car_solve(const SmoothProgram& sp, const CarConfig& cfg) {
  if (sp.convexity != Convexity::Biconvex)
    throw std::invalid_argument("the alternation baseline needs a biconvex program");
  const Bounds b = default_bounds(sp);
  const Vec y0 = 0.5 * (b.lo.segment(sp.z_dim, sp.y_dim) +
                        b.hi.segment(sp.z_dim, sp.y_dim));
  return car_solve(sp, y0, cfg);
}

double gap(double reference_obj, double candidate_obj) {
  if (reference_obj == 0.0)
    throw std::invalid_argument("gap undefined for a zero reference");
  return (reference_obj - candidate_obj) / reference_obj;
}

}  // namespace drgp
