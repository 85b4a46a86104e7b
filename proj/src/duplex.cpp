#include "drgp/duplex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <locale>
#include <stdexcept>

#include "drgp/reformulate.hpp"

namespace drgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void fill_slice(Vec& lo, Vec& hi, const Slice& s, double a, double b) {
  if (s.empty()) return;
  lo.segment(s.off, s.len).setConstant(a);
  hi.segment(s.off, s.len).setConstant(b);
}

struct Packed {
  int zd, yd, ng;
  int dim() const { return zd + yd + ng; }
  Vec pack(const DuplexState& s) const {
    Vec u(dim());
    u << s.z, s.y, s.omega;
    return u;
  }
  DuplexState unpack(const Vec& u) const {
    return {u.head(zd), u.segment(zd, yd), u.tail(ng)};
  }
};

}  // namespace

void duplex_field(const SmoothProgram& sp, const DuplexState& s, double kappa1,
                  double kappa2, Vec& dz, Vec& dy, Vec& domega, double rho) {
  const int zd = sp.z_dim, yd = sp.y_dim;
  Vec w(zd + yd);
  w << s.z, s.y;
  Vec g;
  Mat J;
  sp.eval(w, g, &J, nullptr);
  const Vec act = (s.omega + rho * g).cwiseMax(0.0);
  const Vec gf = sp.grad_f(w);
  dz = -(gf.head(zd) + J.leftCols(zd).transpose() * act) / kappa1;
  dy = -(J.rightCols(yd).transpose() * act) / kappa2;
  domega = (act - s.omega) / kappa2;
}

double duplex_kkt_residual(const SmoothProgram& sp, const DuplexState& s) {
  const int zd = sp.z_dim, yd = sp.y_dim;
  Vec w(zd + yd);
  w << s.z, s.y;
  Vec g;
  Mat J;
  sp.eval(w, g, &J, nullptr);
  const Vec gf = sp.grad_f(w);
  const double stat_z = (gf.head(zd) + J.leftCols(zd).transpose() * s.omega)
                            .lpNorm<Eigen::Infinity>();
  const double stat_y =
      (J.rightCols(yd).transpose() * s.omega).lpNorm<Eigen::Infinity>();
  const double prim = g.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
  const double dual = (-s.omega).cwiseMax(0.0).lpNorm<Eigen::Infinity>();
  const double comp = std::abs(s.omega.dot(g));
  return std::max({stat_z, stat_y, prim, dual, comp});
}

Bounds default_bounds(const SmoothProgram& sp) {
  const int dim = sp.z_dim + sp.y_dim + sp.n_g;
  Bounds b;
  b.lo = Vec::Constant(dim, -20.0);
  b.hi = Vec::Constant(dim, 20.0);
  fill_slice(b.lo, b.hi, sp.layout.r, -10.0, 10.0);
  fill_slice(b.lo, b.hi, sp.layout.x, std::log(1e-6), -1e-9);
  fill_slice(b.lo, b.hi, sp.layout.y, 1e-6, 1.0 - 1e-6);
  fill_slice(b.lo, b.hi, sp.layout.lam, -20.0, 0.0);
  fill_slice(b.lo, b.hi, sp.layout.beta, -20.0, 20.0);
  fill_slice(b.lo, b.hi, sp.layout.pi, -20.0, 20.0);
  for (int i = 0; i < sp.z_dim + sp.y_dim; ++i) {
    b.lo[i] = std::max(b.lo[i], sp.guard_lo[i]);
    b.hi[i] = std::min(b.hi[i], sp.guard_hi[i]);
  }
  Slice om{sp.z_dim + sp.y_dim, sp.n_g};
  fill_slice(b.lo, b.hi, om, 0.0, 100.0);
  return b;
}

namespace {

struct RowIndex {
  int coupling = -1;
  std::vector<int> moment;
  std::vector<int> upper;
};

RowIndex index_rows(const SmoothProgram& sp) {
  RowIndex ix;
  for (int i = 0; i < sp.n_g; ++i) {
    switch (sp.rows[i]) {
      case RowKind::Coupling:
        if (ix.coupling < 0) ix.coupling = i;
        break;
      case RowKind::Robust:
        ix.moment.push_back(i);
        break;
      case RowKind::Upper:
        ix.upper.push_back(i);
        break;
      default:
        break;
    }
  }
  return ix;
}

// Project y onto the affine slice {c0 + slope.y = 0} within [flo, fhi].
// Budget rows have uniformly negative slopes, so repeated Newton steps along
// the slope with clipping settle onto the face whenever it meets the box.
bool face_project(Vec& y, const Vec& slope, double c0, const Vec& flo,
                  const Vec& fhi) {
  const double s2 = slope.squaredNorm();
  if (s2 <= 0.0) return false;
  for (int it = 0; it < 200; ++it) {
    const double r = c0 + slope.dot(y);
    if (std::abs(r) <= 1e-13 * (1.0 + std::abs(c0))) return true;
    y -= (r / s2) * slope;
    for (int k = 0; k < y.size(); ++k)
      y[k] = std::min(std::max(y[k], flo[k]), fhi[k]);
  }
  return std::abs(c0 + slope.dot(y)) <= 1e-9 * (1.0 + std::abs(c0));
}

// Expand a design guess into a full rest point of the duplex dynamics. The
// margins are driven to the probability budget face and the per-row prices
// (the reduced multipliers, scaled by the face slope) are equalized by a
// diagonal secant iteration; rows parked at their cap may price below the
// common level, with the gap carried by the cap multiplier. The balanced
// point is then lifted back through the dual block.
bool complete_margins(const SmoothProgram& sp, const Bounds& b,
                      const DuplexConfig& cfg, const Vec& y_seed,
                      DuplexState& built, long& evals) {
  if (!sp.z_reduce || !sp.z_lift) return false;
  const int zd = sp.z_dim, yd = sp.y_dim;
  const RowIndex ix = index_rows(sp);
  if (yd < 1 || ix.coupling < 0 ||
      static_cast<int>(ix.moment.size()) != yd)
    return false;
  const bool have_up = static_cast<int>(ix.upper.size()) == yd;

  Vec flo(yd), fhi(yd);
  for (int k = 0; k < yd; ++k) {
    const double gl = sp.guard_lo[zd + k], gh = sp.guard_hi[zd + k];
    flo[k] = std::isfinite(gl) ? gl : b.lo[zd + k];
    fhi[k] = std::isfinite(gh) ? gh : b.hi[zd + k];
    if (!(flo[k] < fhi[k])) return false;
  }

  // The budget row is affine in y; probe its slope and offset from inside
  // the box, where the evaluator does not clamp.
  Vec w(zd + yd);
  w.head(zd) = sp.start.head(zd);
  w.tail(yd) = flo;
  Vec gb;
  sp.eval(w, gb, nullptr, nullptr);
  Vec slope(yd);
  for (int k = 0; k < yd; ++k) {
    w.tail(yd) = flo;
    w[zd + k] = fhi[k];
    Vec gk;
    sp.eval(w, gk, nullptr, nullptr);
    slope[k] = (gk[ix.coupling] - gb[ix.coupling]) / (fhi[k] - flo[k]);
    if (!(slope[k] < 0.0)) return false;
  }
  const double c0 = gb[ix.coupling] - slope.dot(flo);

  Vec y = y_seed.cwiseMax(flo).cwiseMin(fhi);
  if (!face_project(y, slope, c0, flo, fhi)) return false;

  NeuroState rs;
  bool warm = false;
  auto prices = [&](const Vec& yv, Vec& phin) {
    SmoothProgram sm = sp.z_reduce(yv);
    NeuroState s0 = warm ? rs : NeuroState{sm.start, Vec::Zero(sm.n_g)};
    SolveReport sol = accelerated_solve(sm, s0, cfg.inner);
    evals += sol.field_evals;
    if (!sol.converged) return false;
    rs = sol.state;
    warm = true;
    phin = rs.gamma.head(yd).cwiseQuotient(-slope);
    return true;
  };

  Vec phin(yd);
  if (!prices(y, phin)) return false;

  Vec sk = Vec::Zero(yd);
  Vec y_prev, phin_prev;
  const double kTopEps = 1e-12;

  double best_res = kInf, best_nu = 0.0;
  Vec best_y, best_phin;
  NeuroState best_rs;

  for (int it = 0; it < 80; ++it) {
    double lo_i = kInf, hi_i = -kInf, top_max = -kInf;
    for (int k = 0; k < yd; ++k) {
      if (y[k] >= fhi[k] - kTopEps)
        top_max = std::max(top_max, phin[k]);
      else {
        lo_i = std::min(lo_i, phin[k]);
        hi_i = std::max(hi_i, phin[k]);
      }
    }
    double nu;
    if (hi_i < lo_i)
      nu = top_max;
    else
      nu = 0.5 * (lo_i + std::max(hi_i, top_max));
    double res = 0.0;
    for (int k = 0; k < yd; ++k) {
      const bool top = y[k] >= fhi[k] - kTopEps;
      const double d = phin[k] - nu;
      res = std::max(res, top ? std::max(0.0, d) : std::abs(d));
    }
    if (res < best_res) {
      best_res = res;
      best_nu = nu;
      best_y = y;
      best_phin = phin;
      best_rs = rs;
    }
    if (best_res <= 5e-7 || it == 79) break;

    if (it > 0) {
      for (int k = 0; k < yd; ++k) {
        const double dy = y[k] - y_prev[k];
        if (std::abs(dy) > 1e-13) {
          const double s_new = (phin[k] - phin_prev[k]) / dy;
          if (s_new > 0.0) sk[k] = s_new;
        }
      }
    }
    y_prev = y;
    phin_prev = phin;
    for (int k = 0; k < yd; ++k)
      if (!(sk[k] > 0.0)) sk[k] = std::max(1.0, std::abs(phin[k])) / 0.02;

    // Step every margin toward a common price level chosen so that the
    // stepped point stays on the budget face; the level is bisected since
    // the face value decreases monotonically in it.
    Vec yn(yd);
    auto stepped = [&](double nu_t) {
      for (int k = 0; k < yd; ++k) {
        double d = (nu_t - phin[k]) / sk[k];
        const double cap = 0.3 * (fhi[k] - flo[k]);
        d = std::min(std::max(d, -cap), cap);
        yn[k] = std::min(std::max(y[k] + d, flo[k]), fhi[k]);
      }
      return c0 + slope.dot(yn);
    };
    double span = 0.5 * std::max(1.0, std::abs(nu));
    double nlo = nu, nhi = nu;
    int guard = 0;
    while (stepped(nlo) < 0.0 && ++guard < 80) {
      nlo -= span;
      span *= 2.0;
    }
    span = 0.5 * std::max(1.0, std::abs(nu));
    guard = 0;
    while (stepped(nhi) > 0.0 && ++guard < 80) {
      nhi += span;
      span *= 2.0;
    }
    for (int t = 0; t < 100; ++t) {
      const double nm = 0.5 * (nlo + nhi);
      if (stepped(nm) > 0.0)
        nlo = nm;
      else
        nhi = nm;
    }
    stepped(nhi);
    y = yn;
    if (!face_project(y, slope, c0, flo, fhi)) return false;
    if (!prices(y, phin)) return false;
  }

  if (best_res > 8e-7) return false;

  Vec z, gamma;
  sp.z_lift(best_y, best_rs.z, best_rs.gamma, z, gamma);
  gamma[ix.coupling] = best_nu;
  if (have_up) {
    for (int k = 0; k < yd; ++k) {
      if (best_y[k] >= fhi[k] - kTopEps)
        gamma[ix.upper[k]] =
            std::max(0.0, -slope[k] * (best_nu - best_phin[k]));
    }
  }
  built.z = z;
  built.y = best_y;
  built.omega = gamma;
  return true;
}

MemberOutcome solve_member(const SmoothProgram& sp, const DuplexState& init,
                           double ratio, const DuplexConfig& cfg,
                           const Bounds& bounds) {
  const int zd = sp.z_dim, yd = sp.y_dim, ng = sp.n_g;
  const Packed pk{zd, yd, ng};
  MemberOutcome out;
  out.state = init;

  const double k2 = cfg.kappa;
  const double k1 = ratio * k2;
  const double kmin = std::min(k1, k2), kmax = std::max(k1, k2);
  const double rho = std::max(1.0, cfg.rho);

  Vec g_buf, act, gf, uz, uy, uo;
  Mat J_buf;
  Vec w(zd + yd);
  Field field = [&](const Vec& u, Vec& dudt, double& uinf) {
    w.head(zd) = u.head(zd);
    w.tail(yd) = u.segment(zd, yd);
    sp.eval(w, g_buf, &J_buf, nullptr);
    act = (u.tail(ng) + rho * g_buf).cwiseMax(0.0);
    gf = sp.grad_f(w);
    uz = -(gf.head(zd) + J_buf.leftCols(zd).transpose() * act);
    uy = -(J_buf.rightCols(yd).transpose() * act);
    uo = act - u.tail(ng);
    dudt.resize(pk.dim());
    dudt.head(zd) = uz / k1;
    dudt.segment(zd, yd) = uy / k2;
    dudt.tail(ng) = uo / k2;
    uinf = std::max({uz.lpNorm<Eigen::Infinity>(), uy.lpNorm<Eigen::Infinity>(),
                     uo.lpNorm<Eigen::Infinity>()});
  };
  Project project = [&](Vec& u) {
    for (int i = 0; i < zd + yd; ++i)
      u[i] = std::min(std::max(u[i], sp.guard_lo[i]), sp.guard_hi[i]);
    u.tail(ng) = u.tail(ng).cwiseMax(0.0);
  };

  OdeOptions opt;
  opt.t_end = cfg.member_time * kmax;
  opt.h0 = 1e-4 * kmin;
  opt.h_max = 0.1 * kmin;
  opt.h_min = 1e-14 * kmin;
  opt.abs_tol = cfg.inner.abs_tol;
  opt.rel_tol = cfg.inner.rel_tol;
  opt.equilibrium_tol = cfg.inner.equilibrium_tol;
  opt.max_steps = cfg.inner.max_steps;
  opt.max_samples = 0;

  OdeResult r = integrate_ode(field, project, pk.pack(init), opt);
  out.field_evals += r.nfev;

  DuplexState eq = pk.unpack(r.state);
  bool settled = r.reason == StopReason::Equilibrium;

  // When the run times out, balance the margins it drifted toward and test
  // the balanced point against the integrator's own rest criterion.
  if (!settled) {
    DuplexState built;
    long ev = 0;
    if (complete_margins(sp, bounds, cfg, eq.y, built, ev)) {
      out.field_evals += ev;
      Vec du;
      double uinf = kInf;
      field(pk.pack(built), du, uinf);
      ++out.field_evals;
      if (uinf <= opt.equilibrium_tol) {
        eq = built;
        settled = true;
      }
    }
  }

  out.state = eq;
  out.converged = settled;
  if (settled) {
    w.head(zd) = eq.z;
    w.tail(yd) = eq.y;
    sp.eval(w, g_buf, nullptr, nullptr);
    if (g_buf.maxCoeff() <= cfg.feas_tol) out.fitness = sp.f(w);
  }
  return out;
}

}  // namespace

PairOutcome run_rnn_pair(const SmoothProgram& sp, const DuplexState& p1,
                         const DuplexState& p2, const DuplexConfig& cfg) {
  const Bounds b = cfg.bounds ? *cfg.bounds : default_bounds(sp);
  PairOutcome out;
  out.m1 = solve_member(sp, p1, cfg.ratio1, cfg, b);
  out.m2 = solve_member(sp, p2, cfg.ratio2, cfg, b);
  return out;
}

void pso_update(Vec& pos, Vec& vel, const Vec& pbest, const Vec& gbest,
                const PsoParams& p, double r1, double r2) {
  vel = p.w * vel + p.c1 * r1 * (pbest - pos) + p.c2 * r2 * (gbest - pos);
  pos += vel;
}

double swarm_diversity(const std::vector<Vec>& positions, const Vec& gbest) {
  if (positions.empty()) return 0.0;
  double d = 0.0;
  for (const auto& p : positions) d += (p - gbest).norm();
  return d / static_cast<double>(positions.size());
}

double wavelet_amplitude(double phi, double a) {
  return std::exp(-phi / (2.0 * a)) * std::cos(5.0 * phi / a) / std::sqrt(a);
}

void wavelet_mutate(Vec& pos, const Bounds& b, int j, int T,
                    std::mt19937_64& rng) {
  const double a = std::exp(10.0 * static_cast<double>(j) / T);
  std::uniform_real_distribution<double> u(-2.5 * a, 2.5 * a);
  const double mu = wavelet_amplitude(u(rng), a);
  for (int i = 0; i < pos.size(); ++i) {
    if (mu > 0.0)
      pos[i] += mu * (b.hi[i] - pos[i]);
    else
      pos[i] += mu * (pos[i] - b.lo[i]);
    pos[i] = std::min(std::max(pos[i], b.lo[i]), b.hi[i]);
  }
}

DuplexReport solve_duplex(const SmoothProgram& sp, const DuplexConfig& cfg) {
  if (sp.convexity != Convexity::Biconvex)
    throw std::invalid_argument("the duplex solver needs a biconvex program");
  const int zd = sp.z_dim, yd = sp.y_dim, ng = sp.n_g;
  const Packed pk{zd, yd, ng};
  const Bounds bounds = cfg.bounds ? *cfg.bounds : default_bounds(sp);
  const int dim = pk.dim();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int swarm = std::max(1, cfg.swarm);
  std::vector<Vec> pos(swarm), vel(swarm, Vec::Zero(dim)), pbest(swarm);
  std::vector<double> pfit(swarm, kInf);

  pos[0] = Vec(dim);
  pos[0] << sp.start, Vec::Zero(ng);
  for (int i = 1; i < swarm; ++i) {
    pos[i] = Vec(dim);
    for (int d = 0; d < dim; ++d)
      pos[i][d] = bounds.lo[d] + (bounds.hi[d] - bounds.lo[d]) * unit(rng);
  }
  for (int i = 0; i < swarm; ++i) {
    for (int d = 0; d < dim; ++d)
      pos[i][d] = std::min(std::max(pos[i][d], bounds.lo[d]), bounds.hi[d]);
    pbest[i] = pos[i];
  }

  DuplexReport rep;
  Vec gbest = pos[0];
  Vec gbest_prev;
  double gfit = kInf;
  DuplexState best_eq;
  DuplexState fallback_eq;
  double fallback_viol = kInf;
  bool have_best = false;

  Vec g_buf;
  Vec w(zd + yd);

  for (int j = 1; j <= cfg.iterations; ++j) {
    for (int i = 0; i < swarm; ++i) {
      const double ratio = (i % 2 == 0) ? cfg.ratio1 : cfg.ratio2;
      MemberOutcome out =
          solve_member(sp, pk.unpack(pos[i]), ratio, cfg, bounds);
      rep.field_evals += out.field_evals;
      w.head(zd) = out.state.z;
      w.tail(yd) = out.state.y;
      sp.eval(w, g_buf, nullptr, nullptr);
      const double viol = g_buf.maxCoeff();
      if (viol < fallback_viol) {
        fallback_viol = viol;
        fallback_eq = out.state;
      }
      if (out.fitness < pfit[i]) {
        pfit[i] = out.fitness;
        pbest[i] = pos[i];
      }
      if (out.fitness < gfit) {
        gfit = out.fitness;
        gbest = pos[i];
        best_eq = out.state;
        have_best = true;
      }
    }
    rep.best_so_far.push_back(gfit);
    const double div = swarm_diversity(pos, gbest);

    if (j >= 2 && have_best && gbest_prev.size() == dim &&
        (gbest - gbest_prev).norm() < cfg.zeta) {
      rep.log.push_back({j, gfit, div, false});
      rep.iterations = j;
      rep.terminated_early = true;
      break;
    }
    gbest_prev = gbest;

    bool mutated = false;
    if (j < cfg.iterations) {
      for (int i = 0; i < swarm; ++i) {
        const double r1 = unit(rng), r2 = unit(rng);
        pso_update(pos[i], vel[i], pbest[i], gbest, cfg.pso, r1, r2);
        for (int d = 0; d < dim; ++d)
          pos[i][d] = std::min(std::max(pos[i][d], bounds.lo[d]), bounds.hi[d]);
      }
      if (div < cfg.zeta) {
        for (int i = 0; i < swarm; ++i)
          wavelet_mutate(pos[i], bounds, j, cfg.iterations, rng);
        mutated = true;
      }
    }
    rep.log.push_back({j, gfit, div, mutated});
    rep.iterations = j;
  }

  if (!have_best) best_eq = fallback_eq;

  if (have_best && cfg.polish) {
    if (sp.z_reduce && sp.z_lift) {
      SmoothProgram sm = sp.z_reduce(best_eq.y);
      Vec zr0 = sm.start;
      if (sp.layout.r.len == sm.n)
        zr0 = best_eq.z.segment(sp.layout.r.off, sp.layout.r.len);
      NeuroState s0{zr0, Vec::Zero(sm.n_g)};
      SolveReport pol = accelerated_solve(sm, s0, cfg.inner);
      rep.field_evals += pol.field_evals;
      if (pol.converged) {
        Vec z2, gam2;
        sp.z_lift(best_eq.y, pol.state.z, pol.state.gamma, z2, gam2);
        for (int i = 0; i < ng; ++i) {
          const RowKind rk = sp.rows[i];
          if (rk == RowKind::Coupling || rk == RowKind::Upper ||
              rk == RowKind::Lower)
            gam2[i] = best_eq.omega[i];
        }
        w.head(zd) = z2;
        w.tail(yd) = best_eq.y;
        sp.eval(w, g_buf, nullptr, nullptr);
        if (g_buf.maxCoeff() <= cfg.feas_tol && sp.f(w) <= gfit) {
          best_eq.z = z2;
          best_eq.omega = gam2;
          gfit = sp.f(w);
        }
      }
    } else {
      SmoothProgram rz = restrict_y(sp, best_eq.y);
      NeuroState s0{best_eq.z, best_eq.omega};
      SolveReport pol = integrate_to_equilibrium(rz, s0, cfg.inner, false);
      rep.field_evals += pol.field_evals;
      w.head(zd) = pol.state.z;
      w.tail(yd) = best_eq.y;
      sp.eval(w, g_buf, nullptr, nullptr);
      if (g_buf.maxCoeff() <= cfg.feas_tol && sp.f(w) <= gfit) {
        best_eq.z = pol.state.z;
        best_eq.omega = pol.state.gamma;
        gfit = sp.f(w);
      }
    }
  }

  rep.state = best_eq;
  rep.best_position = gbest;
  rep.objective = gfit;
  rep.feasible = have_best;
  if (best_eq.z.size() == zd) rep.kkt = duplex_kkt_residual(sp, best_eq);
  return rep;
}

void write_iteration_csv(const DuplexReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "j,best_fitness,diversity,mutated\n";
  for (const auto& row : rep.log)
    out << row.j << "," << row.best_fitness << "," << row.diversity << ","
        << (row.mutated ? 1 : 0) << "\n";
}

}  // namespace drgp
