#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drgp/robustness.hpp"
#include "drgp/types.hpp"

namespace drgp {

// Rectangular enclosure sizing: two uncertain rows (wall area, floor area)
// over three log dimensions. Moments are fixed; eps selects the risk level.
RobustGP make_box3d(double eps, Coupling coupling,
                    AmbiguityKind kind = AmbiguityKind::TwoMoment);

// Multi-segment enclosure with m design variables: one wall row with m-1
// random terms, one floor row, and m(m-1) deterministic aspect-ratio rows.
RobustGP make_multishape(int m, AmbiguityKind kind, Coupling coupling,
                         double eps, std::uint64_t seed);

// Power control: K uncertain interference rows over K power variables plus
// the shared slack variable; box power limits as deterministic rows.
// Coupling::Dependent is the joint formulation, Coupling::Individual the
// per-link one. Support-only ambiguity.
RobustGP make_sinr(int k, Coupling coupling, double eps, std::uint64_t seed);

std::string to_json(const RobustGP& gp);
RobustGP gp_from_json(const std::string& text);
void save_gp(const RobustGP& gp, const std::string& path);
RobustGP load_gp(const std::string& path);

struct ReportRow {
  std::string label;
  double eps = 0.0;
  double objective = 0.0;
  double kkt = 0.0;
  bool converged = false;
  int violations = -1;  // -1 when not evaluated
  double seconds = 0.0;
};

struct ReportTable {
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
};

void write_report_csv(const ReportTable& table, const std::string& path);

}  // namespace drgp
