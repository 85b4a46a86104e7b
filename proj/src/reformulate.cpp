#include "drgp/reformulate.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "drgp/gp_core.hpp"

namespace drgp {

namespace {

constexpr double kMarginEdge = 1e-9;   // keeps margins off their singular ends
constexpr double kMarginSlack = 1e-6;  // dependent lower guard below 1 - eps

struct CompiledBlock {
  Mat A;
  Vec mu;
  Mat Sigma;  // empty unless two-moment uncertain
  Vec lmu;    // log mean, support-only forms
  bool single = false;
  Vec a0;        // first exponent row when single
  double c0 = 0.0;
};

void split_blocks(const RobustGP& gp, std::vector<CompiledBlock>& un,
                  std::vector<CompiledBlock>& ce) {
  for (const auto& b : gp.constraints) {
    CompiledBlock c;
    c.A = b.exponents;
    c.mu = b.mean;
    if (!b.certain && b.cov) c.Sigma = *b.cov;
    c.lmu = b.mean.array().log();
    c.single = c.A.rows() == 1;
    if (c.single) {
      c.a0 = c.A.row(0).transpose();
      c.c0 = c.mu[0];
    }
    (b.certain ? ce : un).push_back(std::move(c));
  }
}

void cap_rows(Vec& g, Mat* J) {
  g = g.cwiseMin(kValueCap).cwiseMax(-kValueCap);
  if (J) *J = J->cwiseMin(kValueCap).cwiseMax(-kValueCap);
}

Vec clamp_box(const Vec& u, const Vec& lo, const Vec& hi, bool* clamped) {
  Vec v = u;
  bool cl = false;
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] < lo[i]) {
      v[i] = lo[i];
      cl = true;
    } else if (v[i] > hi[i]) {
      v[i] = hi[i];
      cl = true;
    }
  }
  if (clamped) *clamped = cl;
  return v;
}

struct ObjectiveCore {
  Mat A;
  Vec c;
  int M = 0;
  int n = 0;

  double value(const Vec& u) const {
    return posy_value(A, c, u.head(M)).value;
  }
  Vec gradient(const Vec& u) const {
    Vec g = Vec::Zero(n);
    g.head(M) = posy_value(A, c, u.head(M)).grad;
    return g;
  }
};

void attach_objective(SmoothProgram& sp, const RobustGP& gp) {
  auto oc = std::make_shared<ObjectiveCore>();
  oc->A = gp.objective.exponents;
  oc->c = gp.objective.mean;
  oc->M = gp.vars();
  oc->n = sp.n;
  sp.f = [oc](const Vec& u) { return oc->value(u); };
  sp.grad_f = [oc](const Vec& u) { return oc->gradient(u); };
}

void append_certain_rows(const std::vector<CompiledBlock>& ce, const Vec& r,
                         int row0, int M, Vec& g, Mat* J) {
  for (size_t c = 0; c < ce.size(); ++c) {
    const int row = row0 + static_cast<int>(c);
    if (ce[c].single) {
      const double v = ce[c].c0 * sat_exp(ce[c].a0.dot(r));
      g[row] = v - 1.0;
      if (J) J->row(row).head(M) = v * ce[c].a0.transpose();
      continue;
    }
    const PosyEval pe = posy_value(ce[c].A, ce[c].mu, r);
    g[row] = pe.value - 1.0;
    if (J) J->row(row).head(M) = pe.grad;
  }
}

// ---------------------------------------------------------------------------
// Two-moment forms

struct TwoMomentCore {
  int M = 0, Ku = 0, Kc = 0, n = 0, ng = 0;
  double eps = 0.0;
  double sg1 = 0.0, sg2 = 0.0;
  Coupling mode = Coupling::Independent;
  double fixed_half = 0.0;  // Individual: exp(shift/2) at y = 1 - eps
  std::vector<CompiledBlock> un, ce;
  Vec lo, hi;

  void eval(const Vec& u_in, Vec& g, Mat* J, bool* clamped) const {
    const Vec u = clamp_box(u_in, lo, hi, clamped);
    g.setZero(ng);
    if (J) J->setZero(ng, n);
    const Vec r = u.head(M);

    for (int k = 0; k < Ku; ++k) {
      double half = fixed_half;
      double dhalf = 0.0;  // w.r.t. the margin coordinate
      if (mode == Coupling::Independent) {
        const double x = u[M + k];
        const double ex = std::exp(x);
        const double shift = x - std::log1p(-ex);
        half = sat_exp(0.5 * shift);
        dhalf = half * 0.5 / (1.0 - ex);
      } else if (mode == Coupling::Dependent) {
        const double y = u[M + k];
        const double shift = std::log(y) - std::log1p(-y);
        half = sat_exp(0.5 * shift);
        dhalf = half * 0.5 / (y * (1.0 - y));
      }
      const PosyEval pe = posy_value(un[k].A, un[k].mu, r);
      const SqrtQuadEval sq = sqrt_quad(un[k].A, un[k].Sigma, r, 0.0);
      const double w = sg1 + sg2 * half;
      g[k] = pe.value + w * sq.value - 1.0;
      if (J) {
        J->row(k).head(M) = pe.grad + w * sq.grad_r;
        if (mode != Coupling::Individual) (*J)(k, M + k) = sg2 * dhalf * sq.value;
      }
    }

    int row = Ku;
    if (mode == Coupling::Independent) {
      g[row] = std::log1p(-eps) - u.segment(M, Ku).sum();
      if (J) J->row(row).segment(M, Ku).setConstant(-1.0);
      ++row;
      for (int k = 0; k < Ku; ++k, ++row) {
        g[row] = u[M + k];
        if (J) (*J)(row, M + k) = 1.0;
      }
    } else if (mode == Coupling::Dependent) {
      g[row] = (static_cast<double>(Ku) - eps) - u.segment(M, Ku).sum();
      if (J) J->row(row).segment(M, Ku).setConstant(-1.0);
      ++row;
      for (int k = 0; k < Ku; ++k, ++row) {
        g[row] = u[M + k] - 1.0;
        if (J) (*J)(row, M + k) = 1.0;
      }
    }
    append_certain_rows(ce, r, row, M, g, J);
    cap_rows(g, J);
  }
};

SmoothProgram build_two_moment(const RobustGP& gp, bool dependent) {
  gp.validate();
  if (gp.ambiguity.kind != AmbiguityKind::TwoMoment)
    throw std::invalid_argument("two-moment builder needs two-moment ambiguity");

  auto core = std::make_shared<TwoMomentCore>();
  split_blocks(gp, core->un, core->ce);
  core->M = gp.vars();
  core->Ku = static_cast<int>(core->un.size());
  core->Kc = static_cast<int>(core->ce.size());
  core->eps = gp.epsilon;
  core->sg1 = std::sqrt(gp.ambiguity.gamma1);
  core->sg2 = std::sqrt(gp.ambiguity.gamma2);
  core->mode = dependent ? Coupling::Dependent : gp.coupling;

  const int M = core->M;
  const int K = core->Ku;
  const bool margins = core->mode != Coupling::Individual;
  core->n = M + (margins ? K : 0);
  core->ng = (margins ? 2 * K + 1 : K) + core->Kc;
  if (core->mode == Coupling::Individual)
    core->fixed_half = std::sqrt((1.0 - gp.epsilon) / gp.epsilon);

  core->lo = Vec::Constant(core->n, -std::numeric_limits<double>::infinity());
  core->hi = Vec::Constant(core->n, std::numeric_limits<double>::infinity());
  if (core->mode == Coupling::Independent)
    core->hi.segment(M, K).setConstant(-kMarginEdge);
  if (core->mode == Coupling::Dependent) {
    core->lo.segment(M, K).setConstant(1.0 - gp.epsilon - kMarginSlack);
    core->hi.segment(M, K).setConstant(1.0 - kMarginEdge);
  }

  SmoothProgram sp;
  sp.layout.r = {0, M};
  if (margins) {
    if (dependent)
      sp.layout.y = {M, K};
    else
      sp.layout.x = {M, K};
  }
  sp.layout.n = sp.n = core->n;
  sp.n_g = core->ng;
  sp.convexity = Convexity::Convex;
  sp.z_dim = core->n;
  sp.y_dim = 0;
  sp.theta = InstanceParameter::from(gp);
  sp.guard_lo = core->lo;
  sp.guard_hi = core->hi;

  sp.rows.assign(K, RowKind::Robust);
  if (margins) {
    sp.rows.push_back(RowKind::Coupling);
    sp.rows.insert(sp.rows.end(), K,
                   dependent ? RowKind::Upper : RowKind::Sign);
  }
  sp.rows.insert(sp.rows.end(), core->Kc, RowKind::Certain);

  sp.start = Vec::Zero(core->n);
  const double y0 = 1.0 - gp.epsilon / (2.0 * K);
  if (margins)
    sp.start.segment(M, K).setConstant(dependent ? y0 : std::log(y0));

  attach_objective(sp, gp);
  sp.eval = [core](const Vec& u, Vec& g, Mat* J, bool* cl) {
    core->eval(u, g, J, cl);
  };
  return sp;
}

// ---------------------------------------------------------------------------
// Support-only forms

struct NsCore {
  int M = 0, Ku = 0, Kc = 0, sumI = 0, n = 0, ng = 0;
  double eps = 0.0;
  Coupling mode = Coupling::Independent;
  bool dep = false;
  std::vector<CompiledBlock> un, ce;
  std::vector<int> ioff;  // per-block offset into the beta family
  // variable offsets
  int ox = -1, olam = 0, obeta = 0, opi = 0, oy = -1;
  Vec lo, hi;

  void eval(const Vec& u_in, Vec& g, Mat* J, bool* clamped) const {
    const Vec u = clamp_box(u_in, lo, hi, clamped);
    g.setZero(ng);
    if (J) J->setZero(ng, n);
    const Vec r = u.head(M);

    int row = 0;
    if (mode == Coupling::Independent) {
      g[row] = std::log1p(-eps) - u.segment(ox, Ku).sum();
      if (J) J->row(row).segment(ox, Ku).setConstant(-1.0);
      ++row;
      for (int k = 0; k < Ku; ++k, ++row) {
        g[row] = u[ox + k];
        if (J) (*J)(row, ox + k) = 1.0;
      }
    } else if (mode == Coupling::Dependent) {
      g[row] = (static_cast<double>(Ku) - eps) - u.segment(oy, Ku).sum();
      if (J) J->row(row).segment(oy, Ku).setConstant(-1.0);
      ++row;
      for (int k = 0; k < Ku; ++k, ++row) {
        g[row] = -u[oy + k];
        if (J) (*J)(row, oy + k) = -1.0;
      }
      for (int k = 0; k < Ku; ++k, ++row) {
        g[row] = u[oy + k] - 1.0;
        if (J) (*J)(row, oy + k) = 1.0;
      }
    }

    // moment rows
    for (int k = 0; k < Ku; ++k, ++row) {
      const double lam = u[olam + k];
      double t1, dt1_dm = 0.0;
      int mi = -1;
      if (mode == Coupling::Independent) {
        mi = ox + k;
        t1 = sat_exp(u[mi] - lam);
        dt1_dm = t1;
      } else if (mode == Coupling::Dependent) {
        mi = oy + k;
        const double e = sat_exp(-lam);
        t1 = u[mi] * e;
        dt1_dm = e;
      } else {
        t1 = (1.0 - eps) * sat_exp(-lam);
      }
      double t2 = 0.0;
      const int I = static_cast<int>(un[k].lmu.size());
      for (int i = 0; i < I; ++i) {
        const double term = sat_exp(-lam + u[obeta + ioff[k] + i] + un[k].lmu[i]);
        t2 += term;
        if (J) (*J)(row, obeta + ioff[k] + i) = term;
      }
      g[row] = t1 + t2 - 1.0;
      if (J) {
        (*J)(row, olam + k) = -(t1 + t2);
        if (mi >= 0) (*J)(row, mi) = dt1_dm;
      }
    }

    // dual cone, dual order
    for (int k = 0; k < Ku; ++k, ++row) {
      g[row] = u[olam + k];
      if (J) (*J)(row, olam + k) = 1.0;
    }
    for (int k = 0; k < Ku; ++k, ++row) {
      g[row] = u[olam + k] - u[opi + k];
      if (J) {
        (*J)(row, olam + k) = 1.0;
        (*J)(row, opi + k) = -1.0;
      }
    }

    // link rows
    for (int k = 0; k < Ku; ++k) {
      const int I = static_cast<int>(un[k].lmu.size());
      for (int i = 0; i < I; ++i, ++row) {
        g[row] = u[opi + k] + un[k].A.row(i).dot(r) - u[obeta + ioff[k] + i];
        if (J) {
          J->row(row).head(M) = un[k].A.row(i);
          (*J)(row, opi + k) = 1.0;
          (*J)(row, obeta + ioff[k] + i) = -1.0;
        }
      }
    }

    append_certain_rows(ce, r, row, M, g, J);
    cap_rows(g, J);
  }
};

SmoothProgram build_ns(const RobustGP& gp, bool dependent) {
  gp.validate();
  if (gp.ambiguity.kind != AmbiguityKind::NonnegSupport)
    throw std::invalid_argument("support-only builder needs support-only ambiguity");

  auto core = std::make_shared<NsCore>();
  split_blocks(gp, core->un, core->ce);
  core->M = gp.vars();
  core->Ku = static_cast<int>(core->un.size());
  core->Kc = static_cast<int>(core->ce.size());
  core->eps = gp.epsilon;
  core->mode = dependent ? Coupling::Dependent : gp.coupling;
  core->dep = dependent;
  for (const auto& b : core->un) {
    core->ioff.push_back(core->sumI);
    core->sumI += static_cast<int>(b.lmu.size());
  }

  const int M = core->M;
  const int K = core->Ku;
  const int SI = core->sumI;
  const bool has_x = core->mode == Coupling::Independent;

  SmoothProgram sp;
  sp.layout.r = {0, M};
  int off = M;
  if (has_x) {
    core->ox = off;
    sp.layout.x = {off, K};
    off += K;
  }
  core->olam = off;
  sp.layout.lam = {off, K};
  off += K;
  core->obeta = off;
  sp.layout.beta = {off, SI};
  off += SI;
  core->opi = off;
  sp.layout.pi = {off, K};
  off += K;
  if (dependent) {
    core->oy = off;
    sp.layout.y = {off, K};
    off += K;
  }
  core->n = off;

  int ng = 3 * K + SI;  // moment + cone + order + links
  if (core->mode == Coupling::Independent) ng += 1 + K;
  if (core->mode == Coupling::Dependent) ng += 1 + 2 * K;
  ng += core->Kc;
  core->ng = ng;

  core->lo = Vec::Constant(core->n, -std::numeric_limits<double>::infinity());
  core->hi = Vec::Constant(core->n, std::numeric_limits<double>::infinity());
  if (has_x) core->hi.segment(core->ox, K).setConstant(-kMarginEdge);
  if (dependent) {
    // The shared budget forces every margin above 1 - eps, so the same box
    // used by the two-moment form applies here and keeps the flow away from
    // the regions where the bound rows take over.
    core->lo.segment(core->oy, K).setConstant(1.0 - gp.epsilon - kMarginSlack);
    core->hi.segment(core->oy, K).setConstant(1.0 - kMarginEdge);
  }

  sp.layout.n = sp.n = core->n;
  sp.n_g = ng;
  sp.convexity = dependent ? Convexity::Biconvex : Convexity::Convex;
  sp.z_dim = dependent ? core->oy : core->n;
  sp.y_dim = dependent ? K : 0;
  sp.theta = InstanceParameter::from(gp);
  sp.guard_lo = core->lo;
  sp.guard_hi = core->hi;

  if (core->mode == Coupling::Independent) {
    sp.rows.push_back(RowKind::Coupling);
    sp.rows.insert(sp.rows.end(), K, RowKind::Sign);
  } else if (core->mode == Coupling::Dependent) {
    sp.rows.push_back(RowKind::Coupling);
    sp.rows.insert(sp.rows.end(), K, RowKind::Lower);
    sp.rows.insert(sp.rows.end(), K, RowKind::Upper);
  }
  sp.rows.insert(sp.rows.end(), K, RowKind::Robust);
  sp.rows.insert(sp.rows.end(), K, RowKind::DualCone);
  sp.rows.insert(sp.rows.end(), K, RowKind::DualOrder);
  sp.rows.insert(sp.rows.end(), SI, RowKind::Link);
  sp.rows.insert(sp.rows.end(), core->Kc, RowKind::Certain);

  sp.start = Vec::Zero(core->n);
  const double y0 = 1.0 - gp.epsilon / (2.0 * K);
  if (has_x) sp.start.segment(core->ox, K).setConstant(std::log(y0));
  if (dependent) sp.start.segment(core->oy, K).setConstant(y0);
  sp.start.segment(core->olam, K).setConstant(-1.0);
  sp.start.segment(core->opi, K).setConstant(-1.0);

  attach_objective(sp, gp);
  sp.eval = [core](const Vec& u, Vec& g, Mat* J, bool* cl) {
    core->eval(u, g, J, cl);
  };

  // At fixed margins the dual block collapses exactly: the order and cone
  // rows pin lam = pi = 0, the links pin beta_i = a_i . r, and each moment
  // row becomes the plain posynomial row posy_k(r) + y_k - 1 <= 0. Solving
  // the design block alone is then equivalent, and the lift reconstructs
  // the dual block and every row multiplier in closed form.
  if (dependent) {
    const Mat objA = gp.objective.exponents;
    const Vec objc = gp.objective.mean;
    sp.z_reduce = [core, objA, objc](const Vec& y) {
      const int M = core->M, Ku = core->Ku, Kc = core->Kc;
      const double inf = std::numeric_limits<double>::infinity();
      SmoothProgram sm;
      sm.layout.r = {0, M};
      sm.layout.n = sm.n = M;
      sm.n_g = Ku + Kc;
      sm.z_dim = M;
      sm.rows.assign(Ku, RowKind::Robust);
      sm.rows.insert(sm.rows.end(), Kc, RowKind::Certain);
      sm.guard_lo = Vec::Constant(M, -inf);
      sm.guard_hi = Vec::Constant(M, inf);
      sm.start = Vec::Zero(M);
      auto oc = std::make_shared<ObjectiveCore>();
      oc->A = objA;
      oc->c = objc;
      oc->M = M;
      oc->n = M;
      sm.f = [oc](const Vec& u) { return oc->value(u); };
      sm.grad_f = [oc](const Vec& u) { return oc->gradient(u); };
      const Vec yv = y;
      sm.eval = [core, yv](const Vec& u, Vec& g, Mat* J, bool* cl) {
        if (cl) *cl = false;
        const int M = core->M, Ku = core->Ku, Kc = core->Kc;
        g.setZero(Ku + Kc);
        if (J) J->setZero(Ku + Kc, M);
        int row = 0;
        for (int k = 0; k < Ku; ++k, ++row) {
          const PosyEval pe = posy_value(core->un[k].A, core->un[k].mu, u);
          g[row] = pe.value + yv[k] - 1.0;
          if (J) J->row(row) = pe.grad.transpose();
        }
        append_certain_rows(core->ce, u, row, M, g, J);
        cap_rows(g, J);
      };
      return sm;
    };
    sp.z_lift = [core](const Vec& y, const Vec& zr, const Vec& gr, Vec& z,
                       Vec& gamma) {
      const int M = core->M, Ku = core->Ku, SI = core->sumI;
      z.setZero(core->oy);
      z.head(M) = zr;
      gamma.setZero(core->ng);
      const int mom = 1 + 2 * Ku, cone = 1 + 3 * Ku, order = 1 + 4 * Ku,
                link = 1 + 5 * Ku, cert = link + SI;
      for (int k = 0; k < Ku; ++k) {
        double posy = 0.0;
        const int I = static_cast<int>(core->un[k].lmu.size());
        for (int i = 0; i < I; ++i) {
          const double b = core->un[k].A.row(i).dot(zr);
          z[core->obeta + core->ioff[k] + i] = b;
          const double term = core->un[k].mu[i] * std::exp(b);
          posy += term;
          gamma[link + core->ioff[k] + i] = gr[k] * term;
        }
        gamma[mom + k] = gr[k];
        gamma[cone + k] = gr[k] * y[k];
        gamma[order + k] = gr[k] * posy;
      }
      for (int c = 0; c < core->Kc; ++c) gamma[cert + c] = gr[Ku + c];
    };
  }
  return sp;
}

}  // namespace

SmoothProgram build_two_moment_ind(const RobustGP& gp) {
  if (gp.coupling == Coupling::Dependent)
    throw std::invalid_argument("dependent coupling belongs to the dependent builder");
  return build_two_moment(gp, false);
}

SmoothProgram build_two_moment_dep(const RobustGP& gp) {
  return build_two_moment(gp, true);
}

SmoothProgram build_ns_ind(const RobustGP& gp) {
  if (gp.coupling == Coupling::Dependent)
    throw std::invalid_argument("dependent coupling belongs to the dependent builder");
  return build_ns(gp, false);
}

SmoothProgram build_ns_dep(const RobustGP& gp) { return build_ns(gp, true); }

SmoothProgram build(const RobustGP& gp) {
  const bool dep = gp.coupling == Coupling::Dependent;
  if (gp.ambiguity.kind == AmbiguityKind::TwoMoment)
    return dep ? build_two_moment_dep(gp) : build_two_moment_ind(gp);
  return dep ? build_ns_dep(gp) : build_ns_ind(gp);
}

SmoothProgram restrict_y(const SmoothProgram& sp, const Vec& y_fix) {
  if (sp.convexity != Convexity::Biconvex)
    throw std::invalid_argument("restrict_y needs a biconvex program");
  if (y_fix.size() != sp.y_dim)
    throw std::invalid_argument("margin vector length mismatch");

  SmoothProgram out;
  out.layout = sp.layout;
  out.layout.y = {};
  out.layout.n = sp.z_dim;
  out.n = sp.z_dim;
  out.n_g = sp.n_g;
  out.convexity = Convexity::Convex;
  out.z_dim = sp.z_dim;
  out.y_dim = 0;
  out.rows = sp.rows;
  out.theta = sp.theta;
  out.guard_lo = sp.guard_lo.head(sp.z_dim);
  out.guard_hi = sp.guard_hi.head(sp.z_dim);
  out.start = sp.start.head(sp.z_dim);

  const int zd = sp.z_dim;
  const Vec yf = y_fix;
  auto pf = sp.f;
  auto pg = sp.grad_f;
  auto pe = sp.eval;
  auto lift = [zd, yf](const Vec& z) {
    Vec u(zd + yf.size());
    u << z, yf;
    return u;
  };
  out.f = [pf, lift](const Vec& z) { return pf(lift(z)); };
  out.grad_f = [pg, lift, zd](const Vec& z) {
    return Vec(pg(lift(z)).head(zd));
  };
  out.eval = [pe, lift, zd](const Vec& z, Vec& g, Mat* J, bool* cl) {
    if (!J) {
      pe(lift(z), g, nullptr, cl);
      return;
    }
    Mat Jfull;
    pe(lift(z), g, &Jfull, cl);
    *J = Jfull.leftCols(zd);
  };
  return out;
}

Vec SmoothProgram::clamp(const Vec& u) const {
  return clamp_box(u, guard_lo, guard_hi, nullptr);
}

Vec SmoothProgram::g(const Vec& u) const {
  Vec gv;
  eval(u, gv, nullptr, nullptr);
  return gv;
}

Mat SmoothProgram::jac_g(const Vec& u) const {
  Vec gv;
  Mat J;
  eval(u, gv, &J, nullptr);
  return J;
}

void SmoothProgram::g_and_jac(const Vec& u, Vec& gv, Mat& J) const {
  eval(u, gv, &J, nullptr);
}

}  // namespace drgp
