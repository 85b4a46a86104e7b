#include "drgp/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace drgp {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace

OdeResult integrate_ode(const Field& field, const Project& project,
                        const Vec& s0, const OdeOptions& opt) {
  const int n = static_cast<int>(s0.size());
  OdeResult res;
  Vec s = s0;
  if (project) project(s);

  double t = 0.0;
  double h = std::min(opt.h0, opt.h_max);
  double errprev = 1.0;
  int stride = 1;

  auto record = [&](double tt, const Vec& ss) {
    res.samples.push_back({tt, ss});
    if (static_cast<int>(res.samples.size()) >= opt.max_samples) {
      std::vector<OdeSample> thin;
      thin.reserve(res.samples.size() / 2 + 1);
      for (std::size_t i = 0; i < res.samples.size(); i += 2)
        thin.push_back(std::move(res.samples[i]));
      res.samples.swap(thin);
      stride *= 2;
    }
  };
  if (opt.max_samples > 0) record(0.0, s);

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), st(n), s5(n), s4(n);
  double uinf = 0.0, scratch = 0.0;
  bool fresh = true;

  while (true) {
    if (fresh) {
      field(s, k1, uinf);
      ++res.nfev;
      fresh = false;
    }
    if (uinf <= opt.equilibrium_tol) {
      res.reason = StopReason::Equilibrium;
      break;
    }
    if (t >= opt.t_end) {
      res.reason = StopReason::MaxTime;
      break;
    }
    if (res.accepted + res.rejected >= opt.max_steps) {
      res.reason = StopReason::MaxSteps;
      break;
    }
    h = std::min({h, opt.h_max, opt.t_end - t});

    st = s + h * (a21 * k1);
    field(st, k2, scratch);
    st = s + h * (a31 * k1 + a32 * k2);
    field(st, k3, scratch);
    st = s + h * (a41 * k1 + a42 * k2 + a43 * k3);
    field(st, k4, scratch);
    st = s + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    field(st, k5, scratch);
    st = s + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    field(st, k6, scratch);
    s5 = s + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    field(s5, k7, scratch);
    s4 = s + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    res.nfev += 6;

    double err2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc =
          opt.abs_tol + opt.rel_tol * std::max(std::abs(s[i]), std::abs(s5[i]));
      const double d = (s5[i] - s4[i]) / sc;
      err2 += d * d;
    }
    const double err = std::sqrt(err2 / n);

    if (!std::isfinite(err)) {
      ++res.rejected;
      h *= 0.2;
    } else if (err <= 1.0) {
      t += h;
      s = s5;
      if (project) project(s);
      ++res.accepted;
      fresh = true;
      if (opt.max_samples > 0 && res.accepted % stride == 0) record(t, s);
      const double e = std::max(err, 1e-10);
      h *= std::clamp(0.9 * std::pow(e, -0.14) * std::pow(errprev, 0.08), 0.2,
                      5.0);
      errprev = e;
    } else {
      ++res.rejected;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    }
    if (h < opt.h_min) {
      res.reason = StopReason::StepUnderflow;
      break;
    }
  }

  if (opt.max_samples > 0 &&
      (res.samples.empty() || res.samples.back().t != t))
    res.samples.push_back({t, s});
  res.state = std::move(s);
  res.t = t;
  return res;
}

}  // namespace drgp
