#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "mpcq/holonomy.hpp"
#include "mpcq/scenarios.hpp"

using namespace mpcq;
using testing_support::kTwoPi;

namespace {

Vec point(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ClosedOrbit closed(const HamiltonianSystem& sys, const Vec& s0, const OrbitOptions& opts = {}) {
  auto res = detect_closed_orbit(sys, s0, opts);
  REQUIRE(std::holds_alternative<ClosedOrbit>(res));
  return std::get<ClosedOrbit>(std::move(res));
}

Complex mpc_lambda(const HamiltonianSystem& sys, const ClosedOrbit& orbit, const HolonomyOptions& opts = {}) {
  const OrbitRecord rec = evaluate_orbit(PrequantizationModel::make(sys, Mode::MPC), orbit, opts);
  REQUIRE(rec.reduced_closed);
  return rec.holonomy.lambda;
}

// Expected oscillator holonomy: (-1)^n exp(-2 pi i E / hbar).
Complex oscillator_lambda(int n, double e) { return std::polar(n % 2 == 0 ? 1.0 : -1.0, -kTwoPi * e); }

bool contains(const std::vector<double>& xs, double x) {
  for (double v : xs)
    if (std::abs(v - x) < 1e-6) return true;
  return false;
}

}  // namespace

TEST_SUITE("reduction_holonomy") {

TEST_CASE("mode parsing") {
  CHECK(parse_mode("mpc") == Mode::MPC);
  CHECK(parse_mode("KS") == Mode::KS);
  CHECK(to_string(Mode::KS) == "ks");
  CHECK_THROWS_AS(parse_mode("bohr"), ParseError);
}

TEST_CASE("oscillator verdicts") {
  struct Case {
    int n;
    double e;
    Mode mode;
    bool quantized;
  };
  const Case cases[] = {
      {1, 0.5, Mode::MPC, true},  {1, 1.0, Mode::MPC, false}, {1, 1.5, Mode::MPC, true},
      {1, 1.0, Mode::KS, true},   {1, 0.5, Mode::KS, false},  {2, 2.0, Mode::MPC, true},
      {2, 1.5, Mode::MPC, false}, {2, 2.0, Mode::KS, true},   {3, 2.5, Mode::MPC, true},
      {3, 2.0, Mode::MPC, false}, {3, 2.0, Mode::KS, true},   {3, 1.5, Mode::KS, false},
  };
  for (const auto& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.e);
    CAPTURE(to_string(c.mode));
    const auto rep = is_quantized(PrequantizationModel::make(harmonic(c.n), c.mode), c.e);
    CHECK(rep.quantized == c.quantized);
    CHECK(rep.orbits.size() == 8);
    CHECK(rep.nonclosing_seeds.empty());
    for (const auto& o : rep.orbits) {
      const Complex expect = c.mode == Mode::MPC ? oscillator_lambda(c.n, c.e) : std::polar(1.0, -kTwoPi * c.e);
      CHECK(std::abs(o.holonomy.lambda - expect) < 1e-8);
    }
  }
}

TEST_CASE("oscillator parities") {
  for (int n = 1; n <= 3; ++n) {
    const auto sys = harmonic(n);
    const auto seeds = level_set_seeds(sys, 1.2);
    const OrbitRecord rec = evaluate_orbit(PrequantizationModel::make(sys, Mode::MPC), closed(sys, seeds[0]));
    // the frame turns once with the orbit; the quotient turns n - 1 times
    CHECK(rec.holonomy.winding_frame == 1);
    CHECK(rec.holonomy.parity_frame == -1);
    CHECK(std::abs(rec.holonomy.winding_reduced) == n - 1);
    CHECK(rec.holonomy.parity_reduced == (n % 2 == 1 ? 1 : -1));
    CHECK(rec.holonomy.traversals == 1);
    CHECK(rec.holonomy.action == doctest::Approx(-kTwoPi * 1.2).epsilon(1e-10));
  }
}

TEST_CASE("hbar scaling") {
  // E = hbar (N + n/2) with hbar = 0.5
  const auto sys = harmonic(1, 0.5);
  const auto model = PrequantizationModel::make(sys, Mode::MPC);
  CHECK(model.hbar == 0.5);
  CHECK(is_quantized(model, 0.25).quantized);
  CHECK(is_quantized(model, 0.75).quantized);
  CHECK_FALSE(is_quantized(model, 0.5).quantized);
}

TEST_CASE("product Hamiltonian") {
  for (double k : {2.0, 2.5}) {
    CAPTURE(k);
    const auto rep = is_quantized(PrequantizationModel::make(product_hamiltonian(k), Mode::MPC), 0.0);
    CHECK(rep.quantized == (k == 2.0));
    for (const auto& o : rep.orbits) CHECK(std::abs(o.holonomy.lambda - (k == 2.0 ? 1.0 : -1.0)) < 1e-8);
  }
}

TEST_CASE("monodromy on a product Hamiltonian orbit") {
  const auto sys = product_hamiltonian(2.0);
  // s01 = s02 = 1 lies on H = 0
  const auto orbit = closed(sys, point({std::sqrt(2.0), std::sqrt(2.0), 0.0, 0.0}));
  REQUIRE(std::abs(sys.energy(orbit.s0)) < 1e-12);
  const auto md = full_vs_reduced_monodromy(sys, orbit, CoisotropicConvention::standard(2));
  CHECK(md.full > 0.1);
  CHECK(md.reduced < 1e-6);
  CHECK(is_symplectic(md.h, 1e-8));
}

TEST_CASE("reduced loop that never closes is vacuous") {
  // frequencies 2 s_j: a closed orbit with s1 = s2 carries a shear in the quotient
  const auto sys = custom("0.25*(p1^2+q1^2)^2 + 0.25*(p2^2+q2^2)^2", 2);
  const auto orbit = closed(sys, point({1.0, 1.0, 0.0, 0.0}));
  const auto model = PrequantizationModel::make(sys, Mode::MPC);
  const OrbitRecord rec = evaluate_orbit(model, orbit);
  CHECK_FALSE(rec.reduced_closed);
  CHECK(rec.reduced_defect > 1e-3);
  CHECK(std::isnan(rec.holonomy.lambda.real()));

  const auto section = frame_section(sys, orbit, CoisotropicConvention::standard(2));
  const auto loop = reduced_monodromy_loop(sys, orbit, section, CoisotropicConvention::standard(2));
  CHECK_FALSE(loop.accepted);
  CHECK(loop.traversals == 8);
  CHECK_THROWS_AS(holonomy(model, loop), LoopNotAcceptedError);
  // KS ignores the reduced loop
  const auto ks = evaluate_orbit(PrequantizationModel::make(sys, Mode::KS), orbit);
  CHECK(std::isfinite(ks.holonomy.lambda.real()));
}

TEST_CASE("non-closing seeds are reported, not failed") {
  const auto sys = custom("0.5*(p1^2+q1^2) + 0.7071067811865476*(p2^2+q2^2)", 2);
  const auto rep = is_quantized(PrequantizationModel::make(sys, Mode::MPC), 1.0);
  CHECK_FALSE(rep.nonclosing_seeds.empty());
  CHECK(rep.orbits.size() + rep.nonclosing_seeds.size() == 8);
}

TEST_CASE("energy grid") {
  const auto g = energy_grid(0.0, 4.0, 0.05);
  CHECK(g.size() == 80);
  CHECK(g.front() == doctest::Approx(0.05));
  CHECK(g.back() == doctest::Approx(4.0));
  CHECK(energy_grid(1.0, 1.0, 0.1).empty());
  CHECK(energy_grid(0.0, 1.0, 0.0).empty());
  CHECK(energy_grid(0.0, 1.0, -0.1).empty());
  CHECK(energy_grid(0.0, 0.25, 0.1).size() == 2);
}

TEST_CASE("energy scans, n = 1") {
  const auto grid = energy_grid(0.0, 2.0, 0.1);
  const auto cmp = compare_modes(harmonic(1), grid);
  CHECK(cmp.mpc.levels.size() == 2);
  CHECK(contains(cmp.mpc.levels, 0.5));
  CHECK(contains(cmp.mpc.levels, 1.5));
  CHECK(cmp.ks.levels.size() == 2);
  CHECK(contains(cmp.ks.levels, 1.0));
  CHECK(contains(cmp.ks.levels, 2.0));
  CHECK(cmp.only_mpc.size() == 2);
  CHECK(cmp.only_ks.size() == 2);
  CHECK(cmp.mpc.points.size() == grid.size());
  CHECK_THROWS_AS(energy_scan(PrequantizationModel::make(harmonic(1), Mode::MPC), {}), PreconditionError);
}

TEST_CASE("energy scan finds levels between grid points") {
  // levels at 0.5 and 1.5 are not on this grid
  const std::vector<double> grid = {0.3, 0.7, 1.1, 1.3, 1.7};
  const auto rep = energy_scan(PrequantizationModel::make(harmonic(1), Mode::MPC), grid);
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.levels[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.levels[1] == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("dynamical invariance") {
  for (double k : {2.0, 2.5}) {
    CAPTURE(k);
    const auto m1 = PrequantizationModel::make(shifted_harmonic(2, k), Mode::MPC);
    const auto m2 = PrequantizationModel::make(product_hamiltonian(k), Mode::MPC);
    const auto inv = invariance_check(m1, m2, 0.0, 0.0);
    CHECK(inv.agree);
    CHECK(inv.quantized1 == (k == 2.0));
    CHECK(inv.quantized2 == (k == 2.0));
    CHECK(inv.seeds.size() >= 8);
    CHECK(inv.max_lambda_gap < 1e-6);
    CHECK(inv.max_hausdorff < 1e-6);
    // the first two seeds lie on the p axes: s02 = 0, then s01 = 0
    CHECK(inv.seeds[0].seed[1] == 0.0);
    CHECK(inv.seeds[1].seed[0] == 0.0);
  }
}

TEST_CASE("invariance under composition") {
  const auto f = Polynomial::parse_univariate("x^3+2x");
  const auto base = harmonic(1);
  const auto comp = composed(base, f);
  for (double e : {0.5, 0.8}) {
    const double fe = e * e * e + 2 * e;
    const auto inv = invariance_check(PrequantizationModel::make(base, Mode::MPC),
                                      PrequantizationModel::make(comp, Mode::MPC), e, fe);
    CHECK(inv.agree);
    CHECK(inv.quantized1 == (e == 0.5));
  }
  CHECK_THROWS_AS(invariance_check(PrequantizationModel::make(base, Mode::MPC),
                                   PrequantizationModel::make(comp, Mode::MPC), 0.5, 2.0),
                  LevelSetError);
}

TEST_CASE("orbit Hausdorff distance") {
  const auto sys = harmonic(1);
  const auto a = closed(sys, point({1.0, 0.0}));
  const auto b = orbit_with_period(sys, point({0.0, 1.0}), kTwoPi, 300);
  CHECK(orbit_hausdorff(sys, a, sys, b) < 1e-8);
  const auto c = closed(sys, point({2.0, 0.0}));
  CHECK(orbit_hausdorff(sys, a, sys, c) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("frame section validation") {
  const auto sys = harmonic(2);
  const auto orbit = closed(sys, point({1.0, 0.3, 0.0, 0.2}));
  const auto conv = CoisotropicConvention::standard(2);
  CHECK_THROWS_AS(frame_section(sys, orbit, conv, 99), PreconditionError);
  const auto sec = frame_section(sys, orbit, conv);
  CHECK(sec.frames.size() == orbit.states.size());
  CHECK(sec.min_pivot >= 1e-3);
  for (const auto& b : sec.frames) CHECK(is_symplectic(b, 1e-9));
}

TEST_CASE("property: gauge invariance") {
  std::mt19937_64 rng(606);
  const auto conv = CoisotropicConvention::standard(2);
  const auto model = PrequantizationModel::make(harmonic(2), Mode::MPC);
  for (double e : {1.3, 2.0}) {
    const auto orbit = closed(model.sys, level_set_seeds(model.sys, e)[3]);
    const auto base_sec = frame_section(model.sys, orbit, conv);
    const auto base = holonomy(model, reduced_monodromy_loop(model.sys, orbit, base_sec, conv));

    // constant gauge in Sp(V;W)
    const Mat h0 = testing_support::random_adapted(2, rng);
    auto sec = base_sec;
    apply_gauge(sec, [&](double) { return h0; });
    const auto c = holonomy(model, reduced_monodromy_loop(model.sys, orbit, sec, conv));
    CHECK(std::abs(c.lambda - base.lambda) < 1e-8);

    // one full turn in the quotient plane moves a unit of winding between frame and quotient
    const double period = orbit.period;
    auto turned = base_sec;
    apply_gauge(turned, [&](double t) { return testing_support::unitary_rotation(2, {0, 1}, kTwoPi * t / period); });
    const auto r = holonomy(model, reduced_monodromy_loop(model.sys, orbit, turned, conv));
    CHECK(std::abs(r.lambda - base.lambda) < 1e-8);
    CHECK(r.winding_frame == base.winding_frame + 1);
    CHECK(r.winding_reduced == base.winding_reduced - 1);
    CHECK(r.parity_frame == -base.parity_frame);
  }
}

TEST_CASE("property: reference choice") {
  for (int n = 2; n <= 3; ++n) {
    const auto sys = harmonic(n);
    const auto orbit = closed(sys, level_set_seeds(sys, 1.7)[n]);
    const Complex ref = mpc_lambda(sys, orbit);
    int used = 0;
    for (int idx = 0; idx < static_cast<int>(reference_candidates(n).size()); ++idx) {
      HolonomyOptions opts;
      opts.reference_index = idx;
      try {
        CHECK(std::abs(mpc_lambda(sys, orbit, opts) - ref) < 1e-8);
        ++used;
      } catch (const DegenerateFrameError&) {
      }
    }
    CHECK(used >= 2);
  }
}

TEST_CASE("property: W convention") {
  struct Case {
    HamiltonianSystem sys;
    double e;
  };
  const Case cases[] = {{harmonic(2), 1.3}, {harmonic(3), 0.9}, {product_hamiltonian(2.5), 0.0}};
  for (const auto& c : cases) {
    HolonomyOptions diag;
    diag.convention = ConventionKind::Diagonal;
    for (const Vec& s : level_set_seeds(c.sys, c.e, {3, 64.0, 4096})) {
      const auto orbit = closed(c.sys, s);
      CHECK(std::abs(mpc_lambda(c.sys, orbit) - mpc_lambda(c.sys, orbit, diag)) < 1e-8);
    }
  }
}

TEST_CASE("property: resolution") {
  const auto sys = product_hamiltonian(2.5);
  for (const Vec& s : level_set_seeds(sys, 0.0, {3, 64.0, 4096})) {
    HolonomyOptions fine;
    fine.orbit.steps_per_period = 4096;
    const Complex a = mpc_lambda(sys, closed(sys, s));
    const Complex b = mpc_lambda(sys, closed(sys, s, fine.orbit), fine);
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("property: H and 2H share holonomy") {
  const auto f = Polynomial::parse_univariate("2x");
  for (int n = 1; n <= 2; ++n) {
    const auto sys = harmonic(n);
    const auto twice = composed(sys, f);
    for (double e : {0.7, 1.0}) {
      const Vec s = level_set_seeds(sys, e)[0];
      const auto o1 = closed(sys, s), o2 = closed(twice, s);
      CHECK(o2.period == doctest::Approx(0.5 * o1.period).epsilon(1e-9));
      CHECK(std::abs(mpc_lambda(sys, o1) - mpc_lambda(twice, o2)) < 1e-8);
    }
  }
}

TEST_CASE("property: chi stays positive and the monodromy stays symplectic") {
  const HamiltonianSystem systems[] = {harmonic(1), harmonic(3), product_hamiltonian(2.0),
                                       composed(harmonic(2), Polynomial::parse_univariate("x^3+2x"))};
  for (const auto& sys : systems) {
    const double e = sys.name == "product_hamiltonian" ? 0.0 : 0.8;
    for (const Vec& s : level_set_seeds(sys, e, {4, 64.0, 4096})) {
      const auto orbit = closed(sys, s);
      CHECK(orbit.max_symplectic_defect < 1e-6);
      for (auto kind : {ConventionKind::Standard, ConventionKind::Diagonal}) {
        const auto conv = make_convention(kind, sys.n);
        const auto loop = reduced_monodromy_loop(sys, orbit, frame_section(sys, orbit, conv), conv);
        CHECK(loop.min_chi > 0.0);
      }
    }
  }
}

}  // TEST_SUITE
