#include "drgp/types.hpp"

#include <cmath>
#include <stdexcept>

namespace drgp {

int RobustGP::uncertain_count() const {
  int k = 0;
  for (const auto& b : constraints) k += b.certain ? 0 : 1;
  return k;
}

int RobustGP::certain_count() const {
  return static_cast<int>(constraints.size()) - uncertain_count();
}

static void check_block(const PosynomialBlock& b, int m, const char* what) {
  if (b.terms() == 0) throw std::invalid_argument(std::string(what) + ": empty block");
  if (b.vars() != m) throw std::invalid_argument(std::string(what) + ": exponent column count mismatch");
  if (b.mean.size() != b.terms())
    throw std::invalid_argument(std::string(what) + ": mean length mismatch");
  for (int i = 0; i < b.mean.size(); ++i)
    if (!(b.mean[i] > 0.0) || !std::isfinite(b.mean[i]))
      throw std::invalid_argument(std::string(what) + ": coefficient means must be positive");
  if (b.cov) {
    if (b.cov->rows() != b.terms() || b.cov->cols() != b.terms())
      throw std::invalid_argument(std::string(what) + ": covariance shape mismatch");
    if (!b.cov->isApprox(b.cov->transpose(), 1e-10))
      throw std::invalid_argument(std::string(what) + ": covariance not symmetric");
  }
}

void RobustGP::validate() const {
  const int m = vars();
  if (m <= 0) throw std::invalid_argument("objective has no variables");
  check_block(objective, m, "objective");
  if (!(epsilon > 0.0) || epsilon > 0.5)
    throw std::invalid_argument("epsilon must lie in (0, 1/2]");
  if (ambiguity.gamma1 < 0.0 || ambiguity.gamma2 < 0.0)
    throw std::invalid_argument("gamma parameters must be nonnegative");
  if (constraints.empty()) throw std::invalid_argument("no constraint blocks");
  for (const auto& b : constraints) {
    check_block(b, m, "constraint");
    if (!b.certain && ambiguity.kind == AmbiguityKind::TwoMoment && !b.cov)
      throw std::invalid_argument("two-moment uncertain block needs a covariance");
  }
  if (uncertain_count() == 0)
    throw std::invalid_argument("no uncertain constraint blocks");
}

InstanceParameter InstanceParameter::from(const RobustGP& gp) {
  std::vector<double> v;
  auto push_vec = [&](const Vec& x) {
    for (int i = 0; i < x.size(); ++i) v.push_back(x[i]);
  };
  push_vec(gp.objective.mean);
  for (const auto& b : gp.constraints) {
    push_vec(b.mean);
    if (b.cov)
      for (int i = 0; i < b.cov->rows(); ++i)
        for (int j = 0; j < b.cov->cols(); ++j) v.push_back((*b.cov)(i, j));
  }
  v.push_back(gp.ambiguity.gamma1);
  v.push_back(gp.ambiguity.gamma2);
  v.push_back(gp.epsilon);
  InstanceParameter p;
  p.flat = Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  return p;
}

const char* to_string(AmbiguityKind k) {
  return k == AmbiguityKind::TwoMoment ? "two-moment" : "nonneg-support";
}

const char* to_string(Coupling c) {
  switch (c) {
    case Coupling::Independent: return "independent";
    case Coupling::Dependent: return "dependent";
    default: return "individual";
  }
}

}  // namespace drgp
