#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One posynomial constraint  sum_i c_i * prod_j t_j^{A(i,j)} <= 1.
// Uncertain rows carry coefficient moments: `mean` always, `cov` for
// two-moment ambiguity. Rows with `certain` set are deterministic and
// bypass the robust machinery entirely.
struct PosynomialBlock {
  Mat exponents;           // terms x vars
  Vec mean;                // terms
  std::optional<Mat> cov;  // terms x terms
  bool certain = false;

  int terms() const { return static_cast<int>(exponents.rows()); }
  int vars() const { return static_cast<int>(exponents.cols()); }
};

enum class AmbiguityKind { TwoMoment, NonnegSupport };

struct AmbiguityParams {
  AmbiguityKind kind = AmbiguityKind::TwoMoment;
  double gamma1 = 0.0;  // mean ellipsoid radius (squared scale)
  double gamma2 = 1.0;  // covariance inflation bound
};

// Independent: product of per-row probabilities >= 1 - eps.
// Dependent:   shared-margin coupling, sum y_k >= K - eps.
// Individual:  each row holds with probability >= 1 - eps on its own.
enum class Coupling { Independent, Dependent, Individual };

struct RobustGP {
  PosynomialBlock objective;  // deterministic
  std::vector<PosynomialBlock> constraints;
  AmbiguityParams ambiguity;
  double epsilon = 0.1;
  Coupling coupling = Coupling::Independent;

  int vars() const { return objective.vars(); }
  int uncertain_count() const;
  int certain_count() const;
  void validate() const;  // throws std::invalid_argument
};

// Numeric payload of an instance, flattened for warm-start distance.
struct InstanceParameter {
  Vec flat;
  static InstanceParameter from(const RobustGP& gp);
};

const char* to_string(AmbiguityKind k);
const char* to_string(Coupling c);

}  // namespace drgp
