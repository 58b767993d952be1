#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "mpcq/scenarios.hpp"

#ifndef MPCQ_VERSION
#define MPCQ_VERSION "0.0.0"
#endif

namespace mpcq::cli {

using nlohmann::json;

const char* version() { return MPCQ_VERSION; }

namespace {

const std::vector<std::string> kScenarios = {"harmonic", "shifted_harmonic", "product_hamiltonian", "composed",
                                             "custom"};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string num(double v) { return fmt("%.12g", v); }

// Line of the first occurrence of "key" in the source text, or 0.
int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  int line = 1;
  for (std::size_t i = 0; i < pos; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

struct FieldReader {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const int line = line_of_key(text, key);
    std::string where = source;
    if (line > 0) where += ":" + std::to_string(line);
    throw ParseError(where + ": field '" + key + "': " + what);
  }

  double number(const json& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }

  int integer(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::string string(const json& v, const std::string& key) const {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
};

std::string terms_to_text(const json& terms, int n, const FieldReader& rd) {
  if (!terms.is_array() || terms.empty()) rd.fail("terms", "expected a non-empty array of {coeff, exps}");
  Polynomial p(2 * n);
  for (const auto& t : terms) {
    if (!t.is_object() || !t.contains("coeff") || !t.contains("exps")) rd.fail("terms", "each term needs coeff and exps");
    const double c = rd.number(t.at("coeff"), "terms");
    const auto& e = t.at("exps");
    if (!e.is_array() || static_cast<int>(e.size()) != 2 * n) {
      rd.fail("terms", "exps must list 2n = " + std::to_string(2 * n) + " exponents (p1..pn, q1..qn)");
    }
    std::vector<int> exps;
    for (const auto& x : e) {
      const int k = rd.integer(x, "terms");
      if (k < 0) rd.fail("terms", "exponents must be non-negative");
      exps.push_back(k);
    }
    p.add_term(c, exps);
  }
  std::vector<std::string> names;
  for (int j = 1; j <= n; ++j) names.push_back("p" + std::to_string(j));
  for (int j = 1; j <= n; ++j) names.push_back("q" + std::to_string(j));
  return p.to_string(names);
}

void validate(const ScenarioConfig& c, const std::string& source, const std::string& text = {}) {
  auto bad = [&](const std::string& key, const std::string& what) {
    // "tolerances.lambda" is keyed as "lambda" in the document
    const int line = line_of_key(text, key.substr(key.rfind('.') + 1));
    throw ParseError(source + (line > 0 ? ":" + std::to_string(line) : "") + ": field '" + key + "': " + what);
  };
  if (std::find(kScenarios.begin(), kScenarios.end(), c.scenario) == kScenarios.end()) {
    bad("scenario", "unknown scenario '" + c.scenario + "'");
  }
  if (c.n < 1 || c.n > 6) bad("n", "expected 1 <= n <= 6");
  if (!(c.hbar > 0.0)) bad("hbar", "must be positive");
  if (!(c.tol > 0.0)) bad("tolerances.lambda", "must be positive");
  if (!(c.tol_orbit > 0.0)) bad("tolerances.orbit", "must be positive");
  if (!(c.tol_reduced > 0.0)) bad("tolerances.reduced", "must be positive");
  if (c.seeds < 1) bad("seeds", "must be at least 1");
  if (c.convention != "standard" && c.convention != "diagonal") bad("convention", "expected standard or diagonal");
}

}  // namespace

Grid parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw ParseError("grid '" + text + "': expected start:stop:step");
  Grid g;
  try {
    std::size_t used = 0;
    double* dst[3] = {&g.start, &g.stop, &g.step};
    for (int i = 0; i < 3; ++i) {
      *dst[i] = std::stod(parts[static_cast<std::size_t>(i)], &used);
      if (used != parts[static_cast<std::size_t>(i)].size()) throw std::invalid_argument("trailing");
    }
  } catch (const std::exception&) {
    throw ParseError("grid '" + text + "': expected three numbers start:stop:step");
  }
  return g;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
  if (!j.is_object()) throw ParseError(source + ": expected a JSON object at the top level");

  FieldReader rd{text, source};
  ScenarioConfig c;
  std::optional<json> terms;
  for (const auto& [key, v] : j.items()) {
    if (key == "scenario") {
      c.scenario = rd.string(v, key);
    } else if (key == "n") {
      c.n = rd.integer(v, key);
    } else if (key == "energy") {
      c.energy = rd.number(v, key);
    } else if (key == "k") {
      c.k = rd.number(v, key);
    } else if (key == "f") {
      c.f = rd.string(v, key);
    } else if (key == "hamiltonian") {
      c.hamiltonian = rd.string(v, key);
    } else if (key == "terms") {
      terms = v;
    } else if (key == "hbar") {
      c.hbar = rd.number(v, key);
    } else if (key == "mode") {
      try {
        c.mode = parse_mode(rd.string(v, key));
      } catch (const ParseError&) {
        rd.fail(key, "expected \"mpc\" or \"ks\"");
      }
    } else if (key == "seeds") {
      c.seeds = rd.integer(v, key);
    } else if (key == "convention") {
      c.convention = rd.string(v, key);
    } else if (key == "tol") {
      c.tol = rd.number(v, key);
    } else if (key == "tolerances") {
      if (!v.is_object()) rd.fail(key, "expected an object");
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "lambda") c.tol = rd.number(tv, tk);
        else if (tk == "orbit") c.tol_orbit = rd.number(tv, tk);
        else if (tk == "reduced") c.tol_reduced = rd.number(tv, tk);
        else rd.fail(tk, "unknown tolerance (expected lambda, orbit or reduced)");
      }
    } else if (key == "grid") {
      if (v.is_string()) {
        c.grid = parse_grid(v.get<std::string>());
      } else if (v.is_object()) {
        Grid g;
        if (!v.contains("start") || !v.contains("stop") || !v.contains("step")) rd.fail(key, "needs start, stop and step");
        g.start = rd.number(v.at("start"), key);
        g.stop = rd.number(v.at("stop"), key);
        g.step = rd.number(v.at("step"), key);
        c.grid = g;
      } else {
        rd.fail(key, "expected \"a:b:step\" or {start, stop, step}");
      }
    } else {
      rd.fail(key, "unknown field");
    }
  }
  if (terms) c.hamiltonian = terms_to_text(*terms, c.n, rd);
  validate(c, source, text);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["n"] = c.n;
  j["energy"] = c.energy ? json(*c.energy) : json(nullptr);
  j["k"] = c.k;
  j["f"] = c.f;
  j["hamiltonian"] = c.hamiltonian;
  j["hbar"] = c.hbar;
  j["mode"] = to_string(c.mode);
  j["tolerances"] = {{"lambda", c.tol}, {"orbit", c.tol_orbit}, {"reduced", c.tol_reduced}};
  j["seeds"] = c.seeds;
  j["convention"] = c.convention;
  if (c.grid) j["grid"] = {{"start", c.grid->start}, {"stop", c.grid->stop}, {"step", c.grid->step}};
  return j;
}

HamiltonianSystem build_system(const ScenarioConfig& c) {
  if (c.scenario == "harmonic") return harmonic(c.n, c.hbar);
  if (c.scenario == "shifted_harmonic") return shifted_harmonic(c.n, c.k * c.hbar, c.hbar);
  if (c.scenario == "product_hamiltonian") return product_hamiltonian(c.k * c.hbar, c.hbar);
  if (c.scenario == "composed") return composed(harmonic(c.n, c.hbar), Polynomial::parse_univariate(c.f));
  if (c.scenario == "custom") {
    if (c.hamiltonian.empty()) throw ParseError("custom scenario: field 'hamiltonian' (or 'terms') is required");
    return custom(c.hamiltonian, c.n, c.hbar);
  }
  throw ParseError("unknown scenario '" + c.scenario + "'");
}

HolonomyOptions build_options(const ScenarioConfig& c) {
  HolonomyOptions o;
  o.tol_lambda = c.tol;
  o.tol_reduced = c.tol_reduced;
  o.orbit.tol_orbit = c.tol_orbit;
  o.seeds.count = c.seeds;
  o.convention = c.convention == "diagonal" ? ConventionKind::Diagonal : ConventionKind::Standard;
  return o;
}

namespace {

json complex_json(double re, double im) {
  auto v = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"re", v(re)}, {"im", v(im)}};
}

double number_or_nan(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

}  // namespace

json report_to_json(const RunReport& r, bool with_timing) {
  json j;
  j["command"] = r.command;
  j["config"] = r.config;
  j["version"] = r.version;
  j["nonclosing"] = r.nonclosing;
  j["levels"] = r.levels;
  json orbits = json::array();
  for (const auto& o : r.orbits) {
    orbits.push_back({{"seed", o.seed},
                      {"period", o.period},
                      {"action", o.action},
                      {"parity_frame", o.parity_frame},
                      {"parity_reduced", o.parity_reduced},
                      {"lambda", complex_json(o.lambda_re, o.lambda_im)},
                      {"trivial", o.trivial},
                      {"reduced_closed", o.reduced_closed}});
  }
  j["orbits"] = orbits;
  if (r.quantized) j["quantized"] = *r.quantized;
  if (!r.scan.empty()) {
    json rows = json::array();
    for (const auto& s : r.scan) {
      rows.push_back({{"energy", s.energy},
                      {"arg", std::isfinite(s.arg) ? json(s.arg) : json(nullptr)},
                      {"lambda", complex_json(s.lambda_re, s.lambda_im)},
                      {"closed", s.closed},
                      {"trivial", s.trivial}});
    }
    j["scan"] = rows;
  }
  if (!r.invariance.empty()) {
    json rows = json::array();
    for (const auto& s : r.invariance) {
      rows.push_back({{"seed", s.seed},
                      {"lambda1", complex_json(s.lambda1_re, s.lambda1_im)},
                      {"lambda2", complex_json(s.lambda2_re, s.lambda2_im)},
                      {"period1", s.period1},
                      {"period2", s.period2},
                      {"hausdorff", s.hausdorff},
                      {"match", s.match}});
    }
    j["invariance"] = rows;
  }
  if (r.agree) j["agree"] = *r.agree;
  if (r.full_defect) j["full_defect"] = *r.full_defect;
  if (r.reduced_defect) j["reduced_defect"] = *r.reduced_defect;
  if (with_timing) j["timing"] = {{"ms", r.timing_ms}};
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.command = j.at("command").get<std::string>();
  r.config = j.at("config");
  r.version = j.at("version").get<std::string>();
  r.nonclosing = j.at("nonclosing").get<int>();
  r.levels = j.at("levels").get<std::vector<double>>();
  for (const auto& o : j.at("orbits")) {
    OrbitOut x;
    x.seed = o.at("seed").get<std::vector<double>>();
    x.period = o.at("period").get<double>();
    x.action = o.at("action").get<double>();
    x.parity_frame = o.at("parity_frame").get<int>();
    x.parity_reduced = o.at("parity_reduced").get<int>();
    x.lambda_re = number_or_nan(o.at("lambda").at("re"));
    x.lambda_im = number_or_nan(o.at("lambda").at("im"));
    x.trivial = o.at("trivial").get<bool>();
    x.reduced_closed = o.at("reduced_closed").get<bool>();
    r.orbits.push_back(std::move(x));
  }
  if (j.contains("quantized")) r.quantized = j.at("quantized").get<bool>();
  if (j.contains("scan")) {
    for (const auto& s : j.at("scan")) {
      ScanRow x;
      x.energy = s.at("energy").get<double>();
      x.arg = number_or_nan(s.at("arg"));
      x.lambda_re = number_or_nan(s.at("lambda").at("re"));
      x.lambda_im = number_or_nan(s.at("lambda").at("im"));
      x.closed = s.at("closed").get<bool>();
      x.trivial = s.at("trivial").get<bool>();
      r.scan.push_back(x);
    }
  }
  if (j.contains("invariance")) {
    for (const auto& s : j.at("invariance")) {
      InvarianceRow x;
      x.seed = s.at("seed").get<std::vector<double>>();
      x.lambda1_re = number_or_nan(s.at("lambda1").at("re"));
      x.lambda1_im = number_or_nan(s.at("lambda1").at("im"));
      x.lambda2_re = number_or_nan(s.at("lambda2").at("re"));
      x.lambda2_im = number_or_nan(s.at("lambda2").at("im"));
      x.period1 = s.at("period1").get<double>();
      x.period2 = s.at("period2").get<double>();
      x.hausdorff = s.at("hausdorff").get<double>();
      x.match = s.at("match").get<bool>();
      r.invariance.push_back(std::move(x));
    }
  }
  if (j.contains("agree")) r.agree = j.at("agree").get<bool>();
  if (j.contains("full_defect")) r.full_defect = j.at("full_defect").get<double>();
  if (j.contains("reduced_defect")) r.reduced_defect = j.at("reduced_defect").get<double>();
  if (j.contains("timing")) r.timing_ms = j.at("timing").at("ms").get<double>();
  return r;
}

namespace {

RunReport base_report(const std::string& command, const ScenarioConfig& c) {
  RunReport r;
  r.command = command;
  r.config = config_to_json(c);
  r.version = version();
  return r;
}

OrbitOut orbit_out(const OrbitRecord& rec) {
  OrbitOut o;
  o.seed.assign(rec.seed.data(), rec.seed.data() + rec.seed.size());
  o.period = rec.period;
  o.action = rec.holonomy.action;
  o.parity_frame = rec.holonomy.parity_frame;
  o.parity_reduced = rec.holonomy.parity_reduced;
  o.lambda_re = rec.holonomy.lambda.real();
  o.lambda_im = rec.holonomy.lambda.imag();
  o.trivial = rec.reduced_closed && rec.holonomy.trivial;
  o.reduced_closed = rec.reduced_closed;
  return o;
}

std::string orbit_table(const std::vector<OrbitOut>& orbits) {
  std::ostringstream t;
  t << "  #  period          action           s_b  s_p  lambda                            trivial\n";
  int i = 0;
  for (const auto& o : orbits) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-2d %-15.10g %-16.10g %+d   %+d   (%.10g, %.10g)  %s\n", i++, o.period, o.action,
                  o.parity_frame, o.parity_reduced, o.lambda_re, o.lambda_im,
                  o.reduced_closed ? (o.trivial ? "yes" : "no") : "open");
    t << line;
  }
  return t.str();
}

double require_energy(const ScenarioConfig& c, const char* command) {
  if (c.energy) return *c.energy;
  if (c.scenario == "product_hamiltonian" || c.scenario == "shifted_harmonic") return 0.0;
  throw PreconditionError(std::string(command) + ": an energy is required (--energy)");
}

}  // namespace

CommandResult cmd_check(const ScenarioConfig& c) {
  const double e = require_energy(c, "check");
  ScenarioConfig echo = c;
  echo.energy = e;
  CommandResult res;
  res.report = base_report("check", echo);
  const auto model = PrequantizationModel::make(build_system(c), c.mode);
  const QuantizationReport q = is_quantized(model, e * c.hbar, build_options(c));
  for (const auto& rec : q.orbits) res.report.orbits.push_back(orbit_out(rec));
  res.report.nonclosing = static_cast<int>(q.nonclosing_seeds.size());
  res.report.quantized = q.quantized;

  std::ostringstream t;
  t << "scenario " << c.scenario << "  n = " << model.sys.n << "  mode " << to_string(c.mode) << "  hbar = " << num(c.hbar)
    << "\n";
  t << "E = " << num(e) << " hbar\n";
  t << orbit_table(res.report.orbits);
  t << "non-closing seeds: " << res.report.nonclosing << "\n";
  if (q.orbits.empty()) t << "no closed orbits found; the condition holds vacuously\n";
  t << "quantized: " << (q.quantized ? "yes" : "no") << "\n";
  res.table = t.str();
  res.exit_code = q.quantized ? kExitOk : kExitConditionFails;
  return res;
}

CommandResult cmd_scan(const ScenarioConfig& c) {
  if (!c.grid) throw PreconditionError("scan: a grid is required (--grid a:b:step)");
  const std::vector<double> grid = energy_grid(c.grid->start * c.hbar, c.grid->stop * c.hbar, c.grid->step * c.hbar);
  if (grid.empty()) throw PreconditionError("scan: the energy grid is empty");
  CommandResult res;
  res.report = base_report("scan", c);
  const auto model = PrequantizationModel::make(build_system(c), c.mode);
  const ScanReport s = energy_scan(model, grid, build_options(c));
  std::ostringstream t;
  t << "scenario " << c.scenario << "  n = " << model.sys.n << "  mode " << to_string(c.mode) << "\n";
  t << "  E/hbar        arg lambda        trivial\n";
  for (const auto& p : s.points) {
    ScanRow row;
    row.energy = p.energy / c.hbar;
    row.closed = p.closed;
    row.trivial = p.trivial;
    row.lambda_re = p.lambda.real();
    row.lambda_im = p.lambda.imag();
    row.arg = p.closed ? std::arg(p.lambda) : std::numeric_limits<double>::quiet_NaN();
    if (!p.closed) ++res.report.nonclosing;
    res.report.scan.push_back(row);
    char line[128];
    if (p.closed) {
      std::snprintf(line, sizeof line, "  %-12.6g  %+-16.10f  %s\n", row.energy, row.arg, p.trivial ? "yes" : "no");
    } else {
      std::snprintf(line, sizeof line, "  %-12.6g  %-16s  -\n", row.energy, "no closed orbit");
    }
    t << line;
  }
  t << "levels (units of hbar):";
  for (double l : s.levels) {
    res.report.levels.push_back(l / c.hbar);
    t << " " << num(l / c.hbar);
  }
  t << "\n";
  res.table = t.str();
  res.exit_code = kExitOk;
  return res;
}

CommandResult cmd_invariance(const ScenarioConfig& c) {
  HamiltonianSystem sys1, sys2;
  double e1 = 0.0, e2 = 0.0;
  ScenarioConfig echo = c;
  if (c.scenario == "product_hamiltonian") {
    echo.n = 2;
    echo.energy = c.energy.value_or(0.0);
    sys1 = shifted_harmonic(2, c.k * c.hbar, c.hbar);
    sys2 = product_hamiltonian(c.k * c.hbar, c.hbar);
    e1 = e2 = *echo.energy * c.hbar;
  } else if (c.scenario == "composed") {
    if (!c.energy) throw PreconditionError("invariance: an energy is required for the composed scenario");
    const Polynomial f = Polynomial::parse_univariate(c.f);
    sys1 = harmonic(c.n, c.hbar);
    sys2 = composed(sys1, f);
    e1 = *c.energy * c.hbar;
    const double x[1] = {e1};
    e2 = f.eval(x);
  } else {
    throw PreconditionError("invariance: scenario must be product_hamiltonian or composed");
  }
  CommandResult res;
  res.report = base_report("invariance", echo);
  const HolonomyOptions opts = build_options(c);
  const InvarianceReport inv = invariance_check(PrequantizationModel::make(sys1, c.mode),
                                                PrequantizationModel::make(sys2, c.mode), e1, e2, opts);
  std::ostringstream t;
  t << "scenario " << c.scenario << "  mode " << to_string(c.mode) << "  E1 = " << num(e1 / c.hbar)
    << " hbar  E2 = " << num(e2 / c.hbar) << " hbar\n";
  t << "  #  lambda (H1)                       lambda (H2)                       hausdorff   match\n";
  int i = 0;
  for (const auto& s : inv.seeds) {
    InvarianceRow row;
    row.seed.assign(s.seed.data(), s.seed.data() + s.seed.size());
    row.lambda1_re = s.lambda1.real();
    row.lambda1_im = s.lambda1.imag();
    row.lambda2_re = s.lambda2.real();
    row.lambda2_im = s.lambda2.imag();
    row.period1 = s.period1;
    row.period2 = s.period2;
    row.hausdorff = s.hausdorff;
    row.match = s.lambda_match && s.closed1 == s.closed2;
    if (!s.closed1 || !s.closed2) ++res.report.nonclosing;
    char line[256];
    std::snprintf(line, sizeof line, "  %-2d (%.10g, %.10g)  (%.10g, %.10g)  %.3g  %s\n", i++, row.lambda1_re,
                  row.lambda1_im, row.lambda2_re, row.lambda2_im, row.hausdorff, row.match ? "yes" : "no");
    t << line;
    res.report.invariance.push_back(std::move(row));
  }
  res.report.quantized = inv.quantized1;
  res.report.agree = inv.agree;
  t << "quantized: H1 " << (inv.quantized1 ? "yes" : "no") << ", H2 " << (inv.quantized2 ? "yes" : "no") << "\n";
  t << "verdicts agree: " << (inv.agree ? "yes" : "no") << "\n";
  res.table = t.str();
  res.exit_code = inv.agree ? kExitOk : kExitConditionFails;
  return res;
}

CommandResult cmd_monodromy_demo(const ScenarioConfig& c) {
  const HamiltonianSystem sys = build_system(c);
  Vec seed;
  ScenarioConfig echo = c;
  if (c.scenario == "product_hamiltonian") {
    echo.n = 2;
    const double s = 0.5 * c.k * c.hbar;  // s_01 = s_02 = k/2 on H = 0
    seed = Vec::Zero(4);
    seed[0] = std::sqrt(2.0 * s);
    seed[1] = std::sqrt(2.0 * s);
  } else {
    const double e = require_energy(c, "monodromy-demo");
    SeedOptions one;
    one.count = 1;
    seed = level_set_seeds(sys, e * c.hbar, one).front();
  }
  CommandResult res;
  res.report = base_report("monodromy-demo", echo);
  const HolonomyOptions opts = build_options(c);
  OrbitSearch found = detect_closed_orbit(sys, seed, opts.orbit);
  if (!std::holds_alternative<ClosedOrbit>(found)) {
    throw PreconditionError("monodromy-demo: the orbit through the seed does not close");
  }
  const ClosedOrbit& orbit = std::get<ClosedOrbit>(found);
  const MonodromyDefects d = full_vs_reduced_monodromy(sys, orbit, make_convention(opts.convention, sys.n));
  const OrbitRecord rec = evaluate_orbit(PrequantizationModel::make(sys, c.mode), orbit, opts);
  res.report.orbits.push_back(orbit_out(rec));
  res.report.full_defect = d.full;
  res.report.reduced_defect = d.reduced;

  std::ostringstream t;
  t << "scenario " << c.scenario << "  n = " << sys.n << "\n";
  t << orbit_table(res.report.orbits);
  t << "max |h - I|      = " << num(d.full) << "\n";
  t << "max |nu(h) - I|  = " << num(d.reduced) << "\n";
  res.table = t.str();
  res.exit_code = d.reduced < c.tol_reduced ? kExitOk : kExitConditionFails;
  return res;
}

namespace {

struct Flags {
  std::string config, scenario, f, mode, grid, out, format = "table", convention, hamiltonian;
  int n = 1, seeds = 8;
  double energy = 0.0, k = 0.0, hbar = 1.0, tol = 1e-6;
};

void add_flags(CLI::App* sub, Flags& fl) {
  sub->add_option("--config", fl.config, "JSON config file; flags override its fields");
  sub->add_option("--scenario", fl.scenario, "harmonic | shifted_harmonic | product_hamiltonian | composed | custom");
  sub->add_option("--n", fl.n, "half-dimension");
  sub->add_option("--energy", fl.energy, "energy in units of hbar");
  sub->add_option("--k", fl.k, "level parameter k in units of hbar");
  sub->add_option("--f", fl.f, "polynomial f(x) for the composed scenario");
  sub->add_option("--mode", fl.mode, "mpc | ks");
  sub->add_option("--hbar", fl.hbar, "Planck constant");
  sub->add_option("--tol", fl.tol, "holonomy triviality tolerance |lambda - 1|");
  sub->add_option("--seeds", fl.seeds, "level-set seeds per energy");
  sub->add_option("--grid", fl.grid, "energy grid a:b:step in units of hbar (energies a+step .. b)");
  sub->add_option("--convention", fl.convention, "standard | diagonal coisotropic convention");
  sub->add_option("--hamiltonian", fl.hamiltonian, "custom H as a polynomial in p1..pn, q1..qn");
  sub->add_option("--out", fl.out, "write the JSON report to FILE");
  sub->add_option("--format", fl.format, "table | json")->check(CLI::IsMember({"table", "json"}));
}

ScenarioConfig merge(const CLI::App* sub, const Flags& fl) {
  ScenarioConfig c = fl.config.empty() ? ScenarioConfig{} : load_config(fl.config);
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--scenario")) c.scenario = fl.scenario;
  if (given("--n")) c.n = fl.n;
  if (given("--energy")) c.energy = fl.energy;
  if (given("--k")) c.k = fl.k;
  if (given("--f")) c.f = fl.f;
  if (given("--mode")) c.mode = parse_mode(fl.mode);
  if (given("--hbar")) c.hbar = fl.hbar;
  if (given("--tol")) c.tol = fl.tol;
  if (given("--seeds")) c.seeds = fl.seeds;
  if (given("--grid")) c.grid = parse_grid(fl.grid);
  if (given("--convention")) c.convention = fl.convention;
  if (given("--hamiltonian")) c.hamiltonian = fl.hamiltonian;
  validate(c, "command line");
  return c;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized energy levels under metaplectic-c and Kostant-Souriau holonomy conditions", "mpcq"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Flags fl;
  CLI::App* check = app.add_subcommand("check", "decide whether one energy is a quantized level");
  CLI::App* scan = app.add_subcommand("scan", "scan an energy grid for quantized levels");
  CLI::App* inv = app.add_subcommand("invariance", "compare verdicts of two Hamiltonians sharing a level set");
  CLI::App* demo = app.add_subcommand("monodromy-demo", "full versus reduced monodromy of one closed orbit");
  for (CLI::App* s : {check, scan, inv, demo}) add_flags(s, fl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const ScenarioConfig cfg = merge(sub, fl);
    const auto t0 = std::chrono::steady_clock::now();
    CommandResult res;
    if (sub == check) res = cmd_check(cfg);
    else if (sub == scan) res = cmd_scan(cfg);
    else if (sub == inv) res = cmd_invariance(cfg);
    else res = cmd_monodromy_demo(cfg);
    res.report.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const json report = report_to_json(res.report);
    if (fl.format == "json") {
      out << report.dump(2) << "\n";
    } else {
      out << res.table;
    }
    if (!fl.out.empty()) {
      std::ofstream f(fl.out);
      if (!f) throw Error("cannot write report to " + fl.out);
      f << report.dump(2) << "\n";
    }
    return res.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace mpcq::cli
