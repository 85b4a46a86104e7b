#include "drgp/bench.hpp"

#include <fstream>
#include <locale>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace drgp {

namespace {

Mat psd_floor(Mat s) {
  s = ((s + s.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < 1e-8) s += (1e-8 - lmin) * Mat::Identity(s.rows(), s.cols());
  return s;
}

PosynomialBlock monomial(const Vec& exps, double coeff, bool certain) {
  PosynomialBlock b;
  b.exponents = exps.transpose();
  b.mean = Vec::Constant(1, coeff);
  b.certain = certain;
  return b;
}

}  // namespace

RobustGP make_box3d(double eps, Coupling coupling, AmbiguityKind kind) {
  RobustGP gp;
  gp.objective.exponents = Mat::Constant(1, 3, -1.0);
  gp.objective.mean = Vec::Constant(1, 1.0);

  PosynomialBlock wall;
  wall.exponents.resize(2, 3);
  wall.exponents << 0, 1, 1, 1, 0, 1;
  wall.mean = Vec::Constant(2, 0.05);

  PosynomialBlock floor;
  floor.exponents.resize(1, 3);
  floor.exponents << 1, 1, 0;
  floor.mean = Vec::Constant(1, 0.5);

  if (kind == AmbiguityKind::TwoMoment) {
    wall.cov = Mat::Identity(2, 2) * 1e-4;
    floor.cov = Mat::Constant(1, 1, 1e-2);
  }
  gp.constraints = {wall, floor};
  gp.ambiguity.kind = kind;
  gp.ambiguity.gamma1 = 2.0;
  gp.ambiguity.gamma2 = 2.0;
  gp.epsilon = eps;
  gp.coupling = coupling;
  return gp;
}

RobustGP make_multishape(int m, AmbiguityKind kind, Coupling coupling,
                         double eps, std::uint64_t seed) {
  if (m < 3) throw std::invalid_argument("need at least three segments");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> umean(0.025, 0.05);
  std::uniform_real_distribution<double> ucov(0.001, 0.01);

  RobustGP gp;
  gp.objective.exponents = Mat::Constant(1, m, -1.0);
  gp.objective.mean = Vec::Constant(1, 1.0);

  PosynomialBlock wall;
  wall.exponents = Mat::Ones(m - 1, m);
  for (int j = 1; j < m; ++j) {
    wall.exponents(j - 1, 0) = 2.0;
    wall.exponents(j - 1, j) = 0.0;
  }
  wall.mean.resize(m - 1);
  for (int j = 0; j < m - 1; ++j) wall.mean[j] = umean(rng);

  PosynomialBlock floor;
  floor.exponents = Mat::Ones(1, m);
  floor.exponents(0, 0) = 0.0;
  floor.mean = Vec::Constant(1, umean(rng));

  if (kind == AmbiguityKind::TwoMoment) {
    Mat sw(m - 1, m - 1);
    for (int i = 0; i < m - 1; ++i)
      for (int j = 0; j < m - 1; ++j) sw(i, j) = ucov(rng);
    wall.cov = psd_floor(sw);
    floor.cov = Mat::Constant(1, 1, ucov(rng));
  }
  gp.constraints = {wall, floor};

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      Vec e = Vec::Zero(m);
      e[i] = 1.0;
      e[j] = -1.0;
      gp.constraints.push_back(monomial(e, 0.5, true));
    }

  gp.ambiguity.kind = kind;
  gp.ambiguity.gamma1 = 2.0;
  gp.ambiguity.gamma2 = 2.0;
  gp.epsilon = eps;
  gp.coupling = coupling;
  return gp;
}

RobustGP make_sinr(int k, Coupling coupling, double eps, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least two links");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(0.01, 0.1);
  std::uniform_real_distribution<double> ub(0.05, 0.2);
  const double p_min = 0.1, p_max = 10.0;
  const int m = k + 1;  // k powers plus the shared slack

  RobustGP gp;
  gp.objective.exponents = Mat::Zero(1, m);
  gp.objective.exponents(0, m - 1) = -1.0;
  gp.objective.mean = Vec::Constant(1, 1.0);

  for (int i = 0; i < k; ++i) {
    PosynomialBlock row;
    row.exponents = Mat::Zero(k, m);
    row.mean.resize(k);
    int t = 0;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      row.exponents(t, j) = 1.0;
      row.exponents(t, i) = -1.0;
      row.exponents(t, m - 1) = 1.0;
      row.mean[t] = ua(rng);
      ++t;
    }
    row.exponents(t, i) = -1.0;
    row.exponents(t, m - 1) = 1.0;
    row.mean[t] = ub(rng);
    gp.constraints.push_back(std::move(row));
  }

  for (int i = 0; i < k; ++i) {
    Vec e = Vec::Zero(m);
    e[i] = 1.0;
    gp.constraints.push_back(monomial(e, 1.0 / p_max, true));
    e[i] = -1.0;
    gp.constraints.push_back(monomial(e, p_min, true));
  }

  gp.ambiguity.kind = AmbiguityKind::NonnegSupport;
  gp.epsilon = eps;
  gp.coupling = coupling;
  return gp;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  const int r = static_cast<int>(j.size());
  if (r == 0) return Mat(0, 0);
  const int c = static_cast<int>(j.at(0).size());
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

json block_to_json(const PosynomialBlock& b) {
  json jb;
  jb["exponents"] = mat_to_json(b.exponents);
  jb["mean"] = std::vector<double>(b.mean.data(), b.mean.data() + b.mean.size());
  if (b.cov) jb["cov"] = mat_to_json(*b.cov);
  jb["certain"] = b.certain;
  return jb;
}

PosynomialBlock block_from_json(const json& j) {
  PosynomialBlock b;
  b.exponents = mat_from_json(j.at("exponents"));
  const auto mv = j.at("mean").get<std::vector<double>>();
  b.mean = Eigen::Map<const Vec>(mv.data(), static_cast<Eigen::Index>(mv.size()));
  if (j.contains("cov")) b.cov = mat_from_json(j.at("cov"));
  b.certain = j.value("certain", false);
  return b;
}

Coupling coupling_from_string(const std::string& s) {
  if (s == "independent") return Coupling::Independent;
  if (s == "dependent") return Coupling::Dependent;
  if (s == "individual") return Coupling::Individual;
  throw std::invalid_argument("unknown coupling: " + s);
}

AmbiguityKind kind_from_string(const std::string& s) {
  if (s == "two-moment") return AmbiguityKind::TwoMoment;
  if (s == "nonneg-support") return AmbiguityKind::NonnegSupport;
  throw std::invalid_argument("unknown ambiguity kind: " + s);
}

}  // namespace

std::string to_json(const RobustGP& gp) {
  json j;
  j["schema_version"] = 1;
  j["epsilon"] = gp.epsilon;
  j["coupling"] = to_string(gp.coupling);
  j["ambiguity"] = {{"kind", to_string(gp.ambiguity.kind)},
                    {"gamma1", gp.ambiguity.gamma1},
                    {"gamma2", gp.ambiguity.gamma2}};
  j["objective"] = block_to_json(gp.objective);
  json cons = json::array();
  for (const auto& b : gp.constraints) cons.push_back(block_to_json(b));
  j["constraints"] = std::move(cons);
  return j.dump(2);
}

RobustGP gp_from_json(const std::string& text) {
  json j = json::parse(text);
  const int ver = j.value("schema_version", 0);
  if (ver != 1)
    throw std::invalid_argument("unsupported schema_version " +
                                std::to_string(ver));
  RobustGP gp;
  gp.epsilon = j.at("epsilon").get<double>();
  gp.coupling = coupling_from_string(j.at("coupling").get<std::string>());
  const auto& ja = j.at("ambiguity");
  gp.ambiguity.kind = kind_from_string(ja.at("kind").get<std::string>());
  gp.ambiguity.gamma1 = ja.value("gamma1", 0.0);
  gp.ambiguity.gamma2 = ja.value("gamma2", 1.0);
  gp.objective = block_from_json(j.at("objective"));
  for (const auto& jb : j.at("constraints"))
    gp.constraints.push_back(block_from_json(jb));
  gp.validate();
  return gp;
}

void save_gp(const RobustGP& gp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << to_json(gp) << "\n";
}

RobustGP load_gp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return gp_from_json(ss.str());
}

void write_report_csv(const ReportTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.imbue(std::locale::classic());
  out.precision(12);
  out << "label,eps,objective,kkt,converged,violations,seconds\n";
  for (const auto& r : table.rows) {
    out << r.label << "," << r.eps << "," << r.objective << "," << r.kkt << ","
        << (r.converged ? 1 : 0) << ",";
    if (r.violations >= 0) out << r.violations;
    out << "," << r.seconds << "\n";
  }
}

}  // namespace drgp
