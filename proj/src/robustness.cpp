#include "drgp/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <locale>
#include <numbers>
#include <stdexcept>

#include "drgp/gp_core.hpp"

namespace drgp {

const char* to_string(Dist d) {
  switch (d) {
    case Dist::Normal: return "normal";
    case Dist::Uniform: return "uniform";
    case Dist::LogNormal: return "lognormal";
    case Dist::Logistic: return "logistic";
    default: return "gamma";
  }
}

double CoefficientSampler::draw(std::mt19937_64& rng, bool& truncated) const {
  if (sd <= 0.0) return mean;
  switch (dist) {
    case Dist::Normal: {
      std::normal_distribution<double> d(mean, sd);
      return d(rng);
    }
    case Dist::Uniform: {
      const double half = std::sqrt(3.0) * sd;
      std::uniform_real_distribution<double> d(mean - half, mean + half);
      if (!nonneg_support || mean - half >= 0.0) return d(rng);
      truncated = true;
      double v = d(rng);
      while (v < 0.0) v = d(rng);
      return v;
    }
    case Dist::LogNormal: {
      const double s2 = std::log1p(sd * sd / (mean * mean));
      std::lognormal_distribution<double> d(std::log(mean) - 0.5 * s2,
                                            std::sqrt(s2));
      return d(rng);
    }
    case Dist::Logistic: {
      const double scale = sd * std::sqrt(3.0) / std::numbers::pi;
      std::uniform_real_distribution<double> u(
          std::numeric_limits<double>::min(), 1.0);
      const double p = u(rng);
      return mean + scale * std::log(p / (1.0 - p));
    }
    default: {
      std::gamma_distribution<double> d(mean * mean / (sd * sd),
                                        sd * sd / mean);
      return d(rng);
    }
  }
}

namespace {

struct UncertainRow {
  const PosynomialBlock* block;
  Vec sd;
};

std::pair<int, bool> run_scenarios(const std::vector<UncertainRow>& rows,
                                   const Vec& t, Dist dist, bool nonneg,
                                   std::uint64_t seed, int dist_idx, int lo,
                                   int hi) {
  int violations = 0;
  bool truncated = false;
  Vec coeffs;
  for (int sc = lo; sc < hi; ++sc) {
    std::seed_seq ss{static_cast<unsigned>(seed & 0xffffffffu),
                     static_cast<unsigned>(seed >> 32),
                     static_cast<unsigned>(dist_idx),
                     static_cast<unsigned>(sc)};
    std::mt19937_64 rng(ss);
    bool violated = false;
    for (const auto& row : rows) {
      coeffs.resize(row.block->terms());
      for (int i = 0; i < coeffs.size(); ++i) {
        CoefficientSampler s{dist, row.block->mean[i], row.sd[i], nonneg};
        coeffs[i] = s.draw(rng, truncated);
      }
      if (posy_at(*row.block, t, coeffs) > 1.0) violated = true;
    }
    if (violated) ++violations;
  }
  return {violations, truncated};
}

}  // namespace

RobustnessReport count_violations(const RobustGP& gp, const Vec& t,
                                  const ScenarioConfig& cfg) {
  if (t.size() != gp.vars())
    throw std::invalid_argument("design point has the wrong length");
  for (int i = 0; i < t.size(); ++i)
    if (!(t[i] > 0.0)) throw std::invalid_argument("design point must be positive");

  const bool nonneg = gp.ambiguity.kind == AmbiguityKind::NonnegSupport;
  std::vector<UncertainRow> rows;
  for (const auto& b : gp.constraints) {
    if (b.certain) continue;
    UncertainRow r{&b, Vec(b.terms())};
    for (int i = 0; i < b.terms(); ++i)
      r.sd[i] = b.cov ? std::sqrt(std::max(0.0, (*b.cov)(i, i)))
                      : cfg.support_sd_scale * b.mean[i];
    rows.push_back(std::move(r));
  }

  RobustnessReport rep;
  rep.n_scenarios = cfg.n_scenarios;
  const int threads = std::max(1, cfg.threads);

  for (std::size_t di = 0; di < cfg.distributions.size(); ++di) {
    const Dist dist = cfg.distributions[di];
    DistResult res;
    res.dist = dist;

    if (threads == 1 || cfg.n_scenarios < 32) {
      auto [v, tr] = run_scenarios(rows, t, dist, nonneg, cfg.seed,
                                   static_cast<int>(di), 0, cfg.n_scenarios);
      res.violations = v;
      res.truncated = tr;
    } else {
      std::vector<std::future<std::pair<int, bool>>> futs;
      const int chunk = (cfg.n_scenarios + threads - 1) / threads;
      for (int lo = 0; lo < cfg.n_scenarios; lo += chunk) {
        const int hi = std::min(cfg.n_scenarios, lo + chunk);
        futs.push_back(std::async(std::launch::async, run_scenarios,
                                  std::cref(rows), std::cref(t), dist, nonneg,
                                  cfg.seed, static_cast<int>(di), lo, hi));
      }
      for (auto& f : futs) {
        auto [v, tr] = f.get();
        res.violations += v;
        res.truncated = res.truncated || tr;
      }
    }
    res.rate = cfg.n_scenarios > 0
                   ? static_cast<double>(res.violations) / cfg.n_scenarios
                   : 0.0;
    rep.rows.push_back(res);
  }
  return rep;
}

void write_robustness_csv(const RobustnessReport& rep,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.imbue(std::locale::classic());
  out << "distribution,violations,rate,truncated\n";
  for (const auto& r : rep.rows)
    out << to_string(r.dist) << "," << r.violations << "," << r.rate << ","
        << (r.truncated ? 1 : 0) << "\n";
}

}  // namespace drgp
