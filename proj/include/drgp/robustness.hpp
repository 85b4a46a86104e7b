#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drgp/types.hpp"

namespace drgp {

enum class Dist { Normal, Uniform, LogNormal, Logistic, Gamma };

const char* to_string(Dist d);

struct ScenarioConfig {
  int n_scenarios = 100;
  std::vector<Dist> distributions = {Dist::Normal, Dist::Uniform,
                                     Dist::LogNormal, Dist::Logistic,
                                     Dist::Gamma};
  std::uint64_t seed = 0;
  double support_sd_scale = 0.2;  // sd = scale * mean when no covariance
  int threads = 1;
};

struct DistResult {
  Dist dist;
  int violations = 0;   // scenarios where some uncertain row exceeded 1
  double rate = 0.0;
  bool truncated = false;  // nonnegative-support draws were clipped
};

struct RobustnessReport {
  int n_scenarios = 0;
  std::vector<DistResult> rows;
};

// Distribution matched to (mean, sd); draw() may be negative except for
// the uniform family under nonnegative support, which redraws.
struct CoefficientSampler {
  Dist dist;
  double mean, sd;
  bool nonneg_support;
  double draw(std::mt19937_64& rng, bool& truncated) const;
};

// Counts scenarios in which the design t violates at least one uncertain
// row under fresh coefficient draws. Certain rows carry no randomness and
// are excluded. Scenario streams are seeded independently, so the counts
// do not depend on the thread count.
RobustnessReport count_violations(const RobustGP& gp, const Vec& t,
                                  const ScenarioConfig& cfg);

void write_robustness_csv(const RobustnessReport& rep, const std::string& path);

}  // namespace drgp
