#include "mpcq/holonomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace mpcq {

std::string to_string(Mode mode) { return mode == Mode::MPC ? "mpc" : "ks"; }

Mode parse_mode(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "mpc") return Mode::MPC;
  if (t == "ks") return Mode::KS;
  throw ParseError("unknown mode '" + text + "' (expected mpc or ks)");
}

CoisotropicConvention make_convention(ConventionKind kind, int n) {
  return kind == ConventionKind::Diagonal ? CoisotropicConvention::diagonal(n) : CoisotropicConvention::standard(n);
}

namespace {

constexpr double kWellConditioned = 1e-3;
constexpr double kContinuityGuard = 0.25;

}  // namespace

FrameSection frame_section(const HamiltonianSystem& sys, const ClosedOrbit& orbit, const CoisotropicConvention& conv,
                           std::optional<int> reference_index) {
  if (orbit.states.size() < 2) throw PreconditionError("frame_section: orbit has no samples");
  const auto candidates = reference_candidates(sys.n);
  std::vector<Vec> grads, xis;
  grads.reserve(orbit.states.size());
  xis.reserve(orbit.states.size());
  for (const auto& s : orbit.states) {
    grads.push_back(sys.gradient(s));
    xis.push_back(hamiltonian_vector_field(sys, s));
  }

  auto build = [&](int idx) -> std::optional<FrameSection> {
    FrameSection sec;
    sec.times = orbit.times;
    sec.reference_index = idx;
    sec.min_pivot = std::numeric_limits<double>::infinity();
    sec.frames.reserve(orbit.states.size());
    for (std::size_t i = 0; i < orbit.states.size(); ++i) {
      FrameBuild fb;
      try {
        fb = adapted_frame_build(grads[i], xis[i], conv, candidates[static_cast<std::size_t>(idx)]);
      } catch (const DegenerateFrameError&) {
        return std::nullopt;
      }
      if (!sec.frames.empty()) {
        const Mat& prev = sec.frames.back();
        if (max_abs(fb.frame - prev) > kContinuityGuard * std::max(1.0, max_abs(prev))) return std::nullopt;
      }
      sec.min_pivot = std::min(sec.min_pivot, fb.min_pivot);
      sec.frames.push_back(std::move(fb.frame));
    }
    return sec;
  };

  if (reference_index) {
    if (*reference_index < 0 || *reference_index >= static_cast<int>(candidates.size())) {
      throw PreconditionError("frame_section: reference index out of range");
    }
    if (auto sec = build(*reference_index)) return std::move(*sec);
    throw DegenerateFrameError("frame_section: requested reference is degenerate along the orbit", 0.0);
  }

  std::optional<FrameSection> best;
  for (int idx = 0; idx < static_cast<int>(candidates.size()); ++idx) {
    auto sec = build(idx);
    if (!sec) continue;
    if (sec->min_pivot >= kWellConditioned) return std::move(*sec);
    if (!best || sec->min_pivot > best->min_pivot) best = std::move(sec);
  }
  if (best) return std::move(*best);
  throw DegenerateFrameError("frame_section: every reference candidate degenerates along the orbit", 0.0);
}

void apply_gauge(FrameSection& section, const std::function<Mat(double)>& h) {
  for (std::size_t i = 0; i < section.frames.size(); ++i) section.frames[i] = section.frames[i] * h(section.times[i]);
}

ReducedLoop reduced_monodromy_loop(const HamiltonianSystem& sys, const ClosedOrbit& orbit,
                                   const FrameSection& section, const CoisotropicConvention& conv,
                                   const HolonomyOptions& opts) {
  const std::size_t m = orbit.times.size();
  if (m < 2 || section.frames.size() != m) throw PreconditionError("reduced_monodromy_loop: section does not match orbit");
  if (conv.n() != sys.n) throw DimensionError("reduced_monodromy_loop: convention dimension mismatch");

  const int d = sys.dim();
  const Mat& b0 = section.frames.front();
  std::vector<Mat> b_inv;
  b_inv.reserve(m);
  for (const auto& b : section.frames) b_inv.push_back(symplectic_inverse(b));

  ReducedLoop loop;
  loop.action = action_integral(sys, orbit);
  loop.min_chi = std::numeric_limits<double>::infinity();
  const Mat& phi_t = orbit.monodromies.back();
  Mat power = Mat::Identity(d, d);

  auto push = [&](double t, std::size_t i, const Mat& phi) {
    Mat g = b_inv[i] * phi * b0;
    loop.min_chi = std::min(loop.min_chi, chi(g, conv));
    loop.quotient.push_back(nu_matrix(g, conv));
    loop.times.push_back(t);
    loop.frames.push_back(section.frames[i]);
    loop.transported.push_back(std::move(g));
  };

  push(orbit.times.front(), 0, orbit.monodromies.front());
  for (int j = 1; j <= std::max(1, opts.k_max_loops); ++j) {
    const double offset = (j - 1) * orbit.period;
    for (std::size_t i = 1; i < m; ++i) push(orbit.times[i] + offset, i, orbit.monodromies[i] * power);
    power = phi_t * power;
    loop.traversals = j;
    const Mat& last = loop.quotient.back();
    loop.closure_defect = last.size() == 0 ? 0.0 : max_abs(last - Mat::Identity(last.rows(), last.cols()));
    if (loop.closure_defect < opts.tol_reduced) {
      loop.accepted = true;
      break;
    }
  }
  return loop;
}

HolonomyResult holonomy(const PrequantizationModel& model, const ReducedLoop& loop, double tol) {
  if (!(model.hbar > 0.0)) throw PreconditionError("holonomy: hbar must be positive");
  HolonomyResult r;
  r.mode = model.mode;
  r.tol = tol;
  if (model.mode == Mode::KS) {
    // KS transport lives on the base orbit itself; one traversal.
    r.traversals = 1;
    r.action = loop.action;
    r.lambda = std::polar(1.0, r.action / model.hbar);
    r.trivial = std::abs(r.lambda - 1.0) < tol;
    return r;
  }
  if (!loop.accepted) {
    throw LoopNotAcceptedError("holonomy: reduced loop does not close (defect " + std::to_string(loop.closure_defect) +
                               ")");
  }
  r.traversals = loop.traversals;
  r.action = loop.action * loop.traversals;

  std::vector<SpElement> frames;
  frames.reserve(loop.frames.size());
  for (const auto& b : loop.frames) frames.push_back(SpElement::trusted(b));
  const double frame_tol = 1e-6 * std::max(1.0, max_abs(loop.frames.front()));
  const LiftedPath frame_lift = mp_lift_loop(frames, loop.times, frame_tol);
  r.winding_frame = frame_lift.winding;
  r.parity_frame = frame_lift.end_parity;

  if (loop.quotient.front().size() > 0) {
    std::vector<SpElement> q;
    q.reserve(loop.quotient.size());
    for (const auto& g : loop.quotient) q.push_back(SpElement::trusted(g));
    const LiftedPath reduced_lift = mp_lift_loop(q, loop.times, std::max(1e-6, 2.0 * loop.closure_defect));
    r.winding_reduced = reduced_lift.winding;
    r.parity_reduced = reduced_lift.end_parity;
  }
  const double sign = (r.parity_frame * r.parity_reduced > 0) ? 1.0 : -1.0;
  r.lambda = sign * std::polar(1.0, r.action / model.hbar);
  r.trivial = std::abs(r.lambda - 1.0) < tol;
  return r;
}

OrbitRecord evaluate_orbit(const PrequantizationModel& model, ClosedOrbit orbit, const HolonomyOptions& opts) {
  const HamiltonianSystem& sys = model.sys;
  const CoisotropicConvention conv = make_convention(opts.convention, sys.n);
  for (int attempt = 0;; ++attempt) {
    try {
      OrbitRecord rec;
      rec.seed = orbit.s0;
      rec.period = orbit.period;
      rec.crossings = orbit.crossings;
      if (model.mode == Mode::KS) {
        ReducedLoop base;
        base.action = action_integral(sys, orbit);
        rec.holonomy = holonomy(model, base, opts.tol_lambda);
        return rec;
      }
      const FrameSection section = frame_section(sys, orbit, conv, opts.reference_index);
      rec.reference_index = section.reference_index;
      const ReducedLoop loop = reduced_monodromy_loop(sys, orbit, section, conv, opts);
      rec.reduced_closed = loop.accepted;
      rec.reduced_defect = loop.closure_defect;
      if (!loop.accepted) {
        rec.holonomy.mode = model.mode;
        rec.holonomy.lambda = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
        return rec;
      }
      rec.holonomy = holonomy(model, loop, opts.tol_lambda);
      return rec;
    } catch (const RefineNeeded&) {
      if (attempt >= opts.max_refinements) throw;
    } catch (const NotAdaptedError&) {
      if (attempt >= opts.max_refinements) throw;
    }
    orbit = orbit_with_period(sys, orbit.s0, orbit.period, 2 * orbit.steps(), orbit.crossings);
  }
}

QuantizationReport is_quantized(const PrequantizationModel& model, double energy, const HolonomyOptions& opts) {
  QuantizationReport rep;
  rep.energy = energy;
  rep.mode = model.mode;
  for (const Vec& seed : level_set_seeds(model.sys, energy, opts.seeds)) {
    OrbitSearch found = detect_closed_orbit(model.sys, seed, opts.orbit);
    if (auto* nc = std::get_if<NonClosing>(&found)) {
      rep.nonclosing_seeds.push_back(nc->s0);
      continue;
    }
    OrbitRecord rec = evaluate_orbit(model, std::get<ClosedOrbit>(std::move(found)), opts);
    if (!rec.reduced_closed) {
      ++rep.unclosed_reduced;
    } else if (!rec.holonomy.trivial) {
      rep.quantized = false;
    }
    rep.orbits.push_back(std::move(rec));
  }
  return rep;
}

std::vector<double> energy_grid(double a, double b, double step) {
  std::vector<double> grid;
  if (!(step > 0.0) || !(b > a) || !std::isfinite(a) || !std::isfinite(b)) return grid;
  const double slack = 1e-9 * step;
  for (long i = 1;; ++i) {
    const double e = a + static_cast<double>(i) * step;
    if (e > b + slack) break;
    grid.push_back(e);
  }
  return grid;
}

namespace {

std::optional<Complex> representative_lambda(const PrequantizationModel& model, double energy,
                                             const HolonomyOptions& opts) {
  SeedOptions one = opts.seeds;
  one.count = 1;
  std::vector<Vec> seeds;
  try {
    seeds = level_set_seeds(model.sys, energy, one);
  } catch (const LevelSetError&) {
    return std::nullopt;
  }
  OrbitSearch found = detect_closed_orbit(model.sys, seeds.front(), opts.orbit);
  if (!std::holds_alternative<ClosedOrbit>(found)) return std::nullopt;
  const OrbitRecord rec = evaluate_orbit(model, std::get<ClosedOrbit>(std::move(found)), opts);
  if (!rec.reduced_closed) return std::nullopt;
  return rec.holonomy.lambda;
}

// Root of arg lambda(E) between lo and hi (opposite signs), Illinois variant of regula falsi.
std::optional<double> refine_level(const PrequantizationModel& model, double lo, double flo, double hi, double fhi,
                                   const HolonomyOptions& opts) {
  int side = 0;
  double e = lo;
  for (int it = 0; it < 60; ++it) {
    e = (lo * fhi - hi * flo) / (fhi - flo);
    const auto l = representative_lambda(model, e, opts);
    if (!l) return std::nullopt;
    const double fe = std::arg(*l);
    if (std::abs(fe) < 1e-13 || hi - lo < 1e-13 * std::max(1.0, std::abs(e))) return e;
    if ((fe < 0.0) == (fhi < 0.0)) {
      hi = e;
      fhi = fe;
      if (side == -1) flo *= 0.5;
      side = -1;
    } else {
      lo = e;
      flo = fe;
      if (side == 1) fhi *= 0.5;
      side = 1;
    }
  }
  return e;
}

}  // namespace

ScanReport energy_scan(const PrequantizationModel& model, const std::vector<double>& grid, const HolonomyOptions& opts) {
  if (grid.empty()) throw PreconditionError("energy_scan: empty energy grid");
  ScanReport rep;
  rep.mode = model.mode;
  for (double e : grid) {
    ScanPoint pt;
    pt.energy = e;
    if (auto l = representative_lambda(model, e, opts)) {
      pt.closed = true;
      pt.lambda = *l;
      pt.trivial = std::abs(*l - 1.0) < opts.tol_lambda;
    } else {
      pt.lambda = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
    }
    rep.points.push_back(pt);
  }

  std::vector<double> candidates;
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const ScanPoint& a = rep.points[i];
    if (a.trivial) candidates.push_back(a.energy);
    if (i + 1 == rep.points.size()) break;
    const ScanPoint& b = rep.points[i + 1];
    if (!a.closed || !b.closed || a.trivial || b.trivial) continue;
    const double fa = std::arg(a.lambda), fb = std::arg(b.lambda);
    const double guard = 0.5 * std::numbers::pi;
    if ((fa < 0.0) != (fb < 0.0) && std::abs(fa) < guard && std::abs(fb) < guard) {
      if (auto root = refine_level(model, a.energy, fa, b.energy, fb, opts)) candidates.push_back(*root);
    }
  }

  for (double e : candidates) {
    if (!rep.levels.empty() && std::abs(rep.levels.back() - e) < 1e-6) continue;
    const QuantizationReport q = is_quantized(model, e, opts);
    if (q.quantized && !q.orbits.empty()) rep.levels.push_back(e);
  }
  std::sort(rep.levels.begin(), rep.levels.end());
  return rep;
}

ModeComparison compare_modes(const HamiltonianSystem& sys, const std::vector<double>& grid,
                             const HolonomyOptions& opts) {
  ModeComparison out;
  out.mpc = energy_scan(PrequantizationModel::make(sys, Mode::MPC), grid, opts);
  out.ks = energy_scan(PrequantizationModel::make(sys, Mode::KS), grid, opts);
  auto contains = [](const std::vector<double>& v, double e) {
    return std::any_of(v.begin(), v.end(), [e](double x) { return std::abs(x - e) < 1e-6; });
  };
  for (double e : out.mpc.levels)
    if (!contains(out.ks.levels, e)) out.only_mpc.push_back(e);
  for (double e : out.ks.levels)
    if (!contains(out.mpc.levels, e)) out.only_ks.push_back(e);
  return out;
}

namespace {

struct HermiteCurve {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<Vec> velocities;

  Vec at(std::size_t k, double s) const {
    const double h = times[k + 1] - times[k];
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * points[k] + (s3 - 2 * s2 + s) * h * velocities[k] +
           (-2 * s3 + 3 * s2) * points[k + 1] + (s3 - s2) * h * velocities[k + 1];
  }
};

HermiteCurve make_curve(const HamiltonianSystem& sys, const ClosedOrbit& o) {
  HermiteCurve c;
  c.times = o.times;
  c.points = o.states;
  c.velocities.reserve(o.states.size());
  for (const auto& s : o.states) c.velocities.push_back(hamiltonian_vector_field(sys, s));
  return c;
}

double segment_distance(const HermiteCurve& c, std::size_t k, const Vec& p) {
  // golden-section search on the squared distance over s in [0, 1]
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = 1.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = (c.at(k, x1) - p).squaredNorm(), f2 = (c.at(k, x2) - p).squaredNorm();
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = (c.at(k, x1) - p).squaredNorm();
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = (c.at(k, x2) - p).squaredNorm();
    }
  }
  const double best = std::min({f1, f2, (c.points[k] - p).squaredNorm(), (c.points[k + 1] - p).squaredNorm()});
  return std::sqrt(best);
}

double directed_hausdorff(const HermiteCurve& from, const HermiteCurve& to) {
  const std::size_t m = to.points.size();
  double worst = 0.0;
  for (const Vec& p : from.points) {
    std::size_t nearest = 0;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      const double d = (to.points[k] - p).squaredNorm();
      if (d < dmin) {
        dmin = d;
        nearest = k;
      }
    }
    double d = std::sqrt(dmin);
    if (nearest > 0) d = std::min(d, segment_distance(to, nearest - 1, p));
    if (nearest + 1 < m) d = std::min(d, segment_distance(to, nearest, p));
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

double orbit_hausdorff(const HamiltonianSystem& sys_a, const ClosedOrbit& a, const HamiltonianSystem& sys_b,
                       const ClosedOrbit& b) {
  if (a.states.size() < 2 || b.states.size() < 2) throw PreconditionError("orbit_hausdorff: empty orbit");
  const HermiteCurve ca = make_curve(sys_a, a), cb = make_curve(sys_b, b);
  return std::max(directed_hausdorff(ca, cb), directed_hausdorff(cb, ca));
}

InvarianceReport invariance_check(const PrequantizationModel& model1, const PrequantizationModel& model2,
                                  double energy1, double energy2, const HolonomyOptions& opts) {
  if (model1.sys.n != model2.sys.n) throw DimensionError("invariance_check: systems differ in dimension");
  InvarianceReport rep;
  rep.energy1 = energy1;
  rep.energy2 = energy2;
  const std::vector<Vec> seeds = level_set_seeds(model1.sys, energy1, opts.seeds);
  for (const Vec& s : seeds) {
    const double g1 = std::abs(model1.sys.energy(s) - energy1);
    const double g2 = std::abs(model2.sys.energy(s) - energy2);
    if (g1 >= kLevelMatchTol || g2 >= kLevelMatchTol) {
      throw LevelSetError("invariance_check: level sets disagree at a seed (|H1 - E1| = " + std::to_string(g1) +
                          ", |H2 - E2| = " + std::to_string(g2) + ")");
    }
  }

  bool all_match = true;
  for (const Vec& s : seeds) {
    InvarianceSeed rec;
    rec.seed = s;
    OrbitSearch f1 = detect_closed_orbit(model1.sys, s, opts.orbit);
    OrbitSearch f2 = detect_closed_orbit(model2.sys, s, opts.orbit);
    rec.closed1 = std::holds_alternative<ClosedOrbit>(f1);
    rec.closed2 = std::holds_alternative<ClosedOrbit>(f2);
    if (rec.closed1 && rec.closed2) {
      const ClosedOrbit& o1 = std::get<ClosedOrbit>(f1);
      const ClosedOrbit& o2 = std::get<ClosedOrbit>(f2);
      rec.period1 = o1.period;
      rec.period2 = o2.period;
      rec.hausdorff = orbit_hausdorff(model1.sys, o1, model2.sys, o2);
      const OrbitRecord r1 = evaluate_orbit(model1, o1, opts);
      const OrbitRecord r2 = evaluate_orbit(model2, o2, opts);
      const bool closed_both = r1.reduced_closed && r2.reduced_closed;
      if (r1.reduced_closed && !r1.holonomy.trivial) rep.quantized1 = false;
      if (r2.reduced_closed && !r2.holonomy.trivial) rep.quantized2 = false;
      rec.lambda1 = r1.holonomy.lambda;
      rec.lambda2 = r2.holonomy.lambda;
      const double gap = closed_both ? std::abs(rec.lambda1 - rec.lambda2) : std::numeric_limits<double>::infinity();
      rec.lambda_match = gap < 1e-6 || (!r1.reduced_closed && !r2.reduced_closed);
      if (closed_both) rep.max_lambda_gap = std::max(rep.max_lambda_gap, gap);
      rep.max_hausdorff = std::max(rep.max_hausdorff, rec.hausdorff);
      if (!rec.lambda_match || rec.hausdorff >= 1e-6) all_match = false;
    } else if (rec.closed1 != rec.closed2) {
      all_match = false;
    }
    rep.seeds.push_back(std::move(rec));
  }
  rep.agree = all_match && rep.quantized1 == rep.quantized2;
  return rep;
}

MonodromyDefects full_vs_reduced_monodromy(const HamiltonianSystem& sys, const ClosedOrbit& orbit,
                                           const CoisotropicConvention& conv) {
  if (orbit.monodromies.empty()) throw PreconditionError("full_vs_reduced_monodromy: orbit has no monodromy");
  const FrameSection section = frame_section(sys, orbit, conv);
  const Mat& b0 = section.frames.front();
  MonodromyDefects out;
  out.h = symplectic_inverse(b0) * orbit.monodromies.back() * b0;
  const int d = sys.dim();
  out.full = max_abs(out.h - Mat::Identity(d, d));
  const Mat q = nu_matrix(out.h, conv);
  out.reduced = q.size() == 0 ? 0.0 : max_abs(q - Mat::Identity(q.rows(), q.cols()));
  return out;
}

}  // namespace mpcq
