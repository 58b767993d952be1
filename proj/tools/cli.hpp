#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcq/holonomy.hpp"

namespace mpcq::cli {

const char* version();

struct Grid {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
};

/// "a:b:step"
Grid parse_grid(const std::string& text);

/// Energies, k and grid values are in units of hbar.
struct ScenarioConfig {
  std::string scenario = "harmonic";
  int n = 1;
  std::optional<double> energy;
  double k = 2.0;
  std::string f = "x^3+2x";
  std::string hamiltonian;  ///< custom scenario, polynomial in p1..pn, q1..qn
  double hbar = 1.0;
  Mode mode = Mode::MPC;
  double tol = 1e-6;
  double tol_orbit = 1e-8;
  double tol_reduced = 1e-6;
  int seeds = 8;
  std::optional<Grid> grid;
  std::string convention = "standard";
};

/// Parses a JSON config document; ParseError messages carry the source name,
/// line/column for syntax errors and the field name for value errors.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "config");
ScenarioConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

HamiltonianSystem build_system(const ScenarioConfig& cfg);
HolonomyOptions build_options(const ScenarioConfig& cfg);

struct OrbitOut {
  std::vector<double> seed;
  double period = 0.0;
  double action = 0.0;
  int parity_frame = 1;
  int parity_reduced = 1;
  double lambda_re = 0.0;
  double lambda_im = 0.0;
  bool trivial = false;
  bool reduced_closed = true;
};

struct ScanRow {
  double energy = 0.0;  ///< units of hbar
  double arg = 0.0;
  double lambda_re = 0.0;
  double lambda_im = 0.0;
  bool closed = false;
  bool trivial = false;
};

struct InvarianceRow {
  std::vector<double> seed;
  double lambda1_re = 0.0, lambda1_im = 0.0;
  double lambda2_re = 0.0, lambda2_im = 0.0;
  double period1 = 0.0, period2 = 0.0;
  double hausdorff = 0.0;
  bool match = false;
};

struct RunReport {
  std::string command;
  nlohmann::json config;
  std::vector<OrbitOut> orbits;
  std::vector<double> levels;  ///< units of hbar
  int nonclosing = 0;
  std::string version;
  std::optional<bool> quantized;
  std::vector<ScanRow> scan;
  std::vector<InvarianceRow> invariance;
  std::optional<bool> agree;
  std::optional<double> full_defect;
  std::optional<double> reduced_defect;
  double timing_ms = 0.0;
};

nlohmann::json report_to_json(const RunReport& r, bool with_timing = true);
RunReport report_from_json(const nlohmann::json& j);

struct CommandResult {
  RunReport report;
  int exit_code = 0;
  std::string table;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConditionFails = 3;

CommandResult cmd_check(const ScenarioConfig& cfg);
CommandResult cmd_scan(const ScenarioConfig& cfg);
CommandResult cmd_invariance(const ScenarioConfig& cfg);
CommandResult cmd_monodromy_demo(const ScenarioConfig& cfg);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mpcq::cli
