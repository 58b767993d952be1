#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "mpcq/hamiltonian.hpp"
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

// Energy-only copy of a system: derivatives fall back to central differences.
HamiltonianSystem energy_only(const HamiltonianSystem& sys) {
  HamiltonianSystem out;
  out.n = sys.n;
  out.name = sys.name + "-fd";
  out.hbar = sys.hbar;
  out.energy_fn = sys.energy_fn;
  return out;
}

}  // namespace

TEST_SUITE("hamiltonian_dynamics") {

TEST_CASE("vector field of the oscillator") {
  const auto sys = harmonic(1);
  CHECK(sys.energy(point({1.0, 0.0})) == doctest::Approx(0.5));
  const Vec xi = hamiltonian_vector_field(sys, point({1.0, 0.0}));
  CHECK((xi - point({0.0, -1.0})).norm() < 1e-15);
  CHECK(max_abs(vector_field_jacobian(sys, point({0.3, 0.2})) - complex_structure(1)) < 1e-15);
  CHECK_THROWS_AS(sys.energy(point({1.0, 0.0, 0.0})), DimensionError);
}

TEST_CASE("xi contracts omega to dH") {
  const auto sys = product_hamiltonian(2.0);
  const Mat om = standard_omega(2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    Vec x(4), v(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = nd(rng);
      v[i] = nd(rng);
    }
    const Vec xi = hamiltonian_vector_field(sys, x);
    CHECK(xi.dot(om * v) == doctest::Approx(sys.gradient(x).dot(v)).epsilon(1e-12));
  }
}

TEST_CASE("primitives satisfy d beta = omega") {
  for (int n = 1; n <= 3; ++n) {
    for (auto kind : {Primitive::Symmetric, Primitive::PdQ}) {
      CHECK(max_abs(primitive_exterior_derivative(kind, n) - standard_omega(n)) < 1e-15);
    }
  }
  const Vec x = point({1.0, 2.0}), v = point({3.0, 5.0});
  CHECK(primitive_pairing(Primitive::PdQ, x, v) == doctest::Approx(5.0));
  CHECK(primitive_pairing(Primitive::Symmetric, x, v) == doctest::Approx(0.5 * (1.0 * 5.0 - 2.0 * 3.0)));
  CHECK_THROWS_AS(primitive_pairing(Primitive::PdQ, x, point({1.0})), DimensionError);
}

TEST_CASE("closed orbit of the oscillator") {
  const auto sys = harmonic(2);
  const Vec s0 = point({1.0, 0.5, -0.2, 0.8});
  const auto res = detect_closed_orbit(sys, s0);
  REQUIRE(std::holds_alternative<ClosedOrbit>(res));
  const auto& orbit = std::get<ClosedOrbit>(res);
  CHECK(orbit.period == doctest::Approx(kTwoPi).epsilon(1e-9));
  CHECK(orbit.closure_residual < 1e-8);
  CHECK(orbit.generator_defect < 1e-8);
  CHECK(orbit.max_symplectic_defect < 1e-8);
  CHECK(max_abs(orbit.monodromies.back() - Mat::Identity(4, 4)) < 1e-8);
  const double e = sys.energy(s0);
  CHECK(action_integral(sys, orbit) == doctest::Approx(-kTwoPi * e).epsilon(1e-10));
}

TEST_CASE("action under the p dq primitive") {
  auto sys = harmonic(1);
  sys.primitive = Primitive::PdQ;
  const auto orbit = std::get<ClosedOrbit>(detect_closed_orbit(sys, point({1.5, 0.0})));
  CHECK(action_integral(sys, orbit) == doctest::Approx(-kTwoPi * 1.125).epsilon(1e-10));
}

TEST_CASE("shifted oscillator and product Hamiltonian orbits") {
  const auto shifted = shifted_harmonic(2, 2.0);
  const auto seeds = level_set_seeds(shifted, 1.0);
  REQUIRE(!seeds.empty());
  CHECK(harmonic(2).energy(seeds[0]) == doctest::Approx(3.0));

  const auto prod = product_hamiltonian(2.0);
  for (const Vec& s : level_set_seeds(prod, 0.0, {4, 64.0, 4096})) {
    CHECK(std::abs(prod.energy(s)) < 1e-10);
    const auto res = detect_closed_orbit(prod, s);
    REQUIRE(std::holds_alternative<ClosedOrbit>(res));
    // on H = 0 the flow is the oscillator flow scaled by s1 + 2 s2 + 1 = 3 + s2
    const double s2 = 0.5 * (s[1] * s[1] + s[3] * s[3]);
    CHECK(std::get<ClosedOrbit>(res).period == doctest::Approx(kTwoPi / (3.0 + s2)).epsilon(1e-8));
  }
}

TEST_CASE("irrational frequencies do not close") {
  const auto sys = custom("0.5*(p1^2+q1^2) + 0.7071067811865476*(p2^2+q2^2)", 2);
  const auto res = detect_closed_orbit(sys, point({1.0, 1.0, 0.0, 0.0}));
  REQUIRE(std::holds_alternative<NonClosing>(res));
  CHECK(std::get<NonClosing>(res).searched_time > 0.0);
  // a seed in one decoupled plane still closes
  const auto single = detect_closed_orbit(sys, point({1.0, 0.0, 0.0, 0.0}));
  CHECK(std::holds_alternative<ClosedOrbit>(single));
}

TEST_CASE("monodromy matches finite differences of the flow") {
  const auto sys = product_hamiltonian(2.0);
  const Vec s0 = point({0.8, -0.4, 0.3, 0.9});
  const double t = 0.7;
  const int steps = 2000;
  const auto mono = integrate_monodromy(sys, s0, t, steps);
  const Mat phi = mono.monodromies.back();
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    Vec sp = s0, sm = s0;
    sp[j] += h;
    sm[j] -= h;
    const Vec ep = integrate_flow(sys, sp, t, t / steps).states.back();
    const Vec em = integrate_flow(sys, sm, t, t / steps).states.back();
    const Vec fd = (ep - em) / (2 * h);
    CHECK((fd - phi.col(j)).cwiseAbs().maxCoeff() < 1e-4);
  }
  CHECK(is_symplectic(phi, 1e-8));
  CHECK(mono.max_symplectic_defect < 1e-8);
}

TEST_CASE("energy conservation at dt = 1e-3") {
  const auto sys = product_hamiltonian(2.5);
  const Vec s0 = point({0.5, 0.7, -1.0, 0.2});
  const auto traj = integrate_flow(sys, s0, 5.0, 1e-3);
  CHECK(traj.times.size() == 5001);
  CHECK(traj.times.back() == doctest::Approx(5.0));
  CHECK(traj.energy_drift < 1e-8);
}

TEST_CASE("action converges under step halving") {
  const auto sys = product_hamiltonian(2.0);
  const Vec s0 = level_set_seeds(sys, 0.0)[1];
  const auto orbit = std::get<ClosedOrbit>(detect_closed_orbit(sys, s0));
  std::vector<double> actions;
  for (int steps : {64, 128, 256, 512}) {
    actions.push_back(action_integral(sys, orbit_with_period(sys, s0, orbit.period, steps)));
  }
  const double d1 = std::abs(actions[1] - actions[0]);
  const double d2 = std::abs(actions[2] - actions[1]);
  const double d3 = std::abs(actions[3] - actions[2]);
  CHECK(d2 < d1);
  CHECK(d3 < d2);
  CHECK(d3 < d2 / 8.0);  // fourth order
  CHECK(d3 < 1e-7);
  CHECK(actions[3] == doctest::Approx(action_integral(sys, orbit)).epsilon(1e-9));
}

TEST_CASE("monodromy fixes the generator") {
  const auto sys = composed(harmonic(2), Polynomial::parse_univariate("x^3+2x"));
  const Vec s0 = level_set_seeds(sys, 0.5)[0];
  const auto orbit = std::get<ClosedOrbit>(detect_closed_orbit(sys, s0));
  const Vec xi = hamiltonian_vector_field(sys, s0);
  CHECK((orbit.monodromies.back() * xi - xi).norm() < 1e-7 * xi.norm());
  // Phi(T) preserves dH
  const Vec g = sys.gradient(s0);
  CHECK((orbit.monodromies.back().transpose() * g - g).norm() < 1e-7 * g.norm());
}

TEST_CASE("finite-difference derivatives agree with analytic ones") {
  const auto sys = product_hamiltonian(2.0);
  const auto fd = energy_only(sys);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = u(rng);
    CHECK((fd.gradient(x) - sys.gradient(x)).cwiseAbs().maxCoeff() < 1e-7);
    const Mat h = fd.hessian(x);
    CHECK(max_abs(h - h.transpose()) == 0.0);
    CHECK(max_abs(h - sys.hessian(x)) < 1e-5);
  }
  // the fallback still yields a usable orbit
  const auto osc = energy_only(harmonic(1));
  const auto orbit = std::get<ClosedOrbit>(detect_closed_orbit(osc, point({1.0, 0.0})));
  CHECK(orbit.period == doctest::Approx(kTwoPi).epsilon(1e-7));
}

TEST_CASE("level-set seeds") {
  const auto sys = harmonic(3);
  const auto seeds = level_set_seeds(sys, 2.0);
  CHECK(seeds.size() == 8);
  for (const Vec& s : seeds) CHECK(sys.energy(s) == doctest::Approx(2.0).epsilon(1e-12));
  // the first three lie on the p_j axes
  for (int j = 0; j < 3; ++j) {
    CHECK(seeds[static_cast<std::size_t>(j)][j] == doctest::Approx(2.0));
    CHECK(seeds[static_cast<std::size_t>(j)].norm() == doctest::Approx(2.0));
  }
  CHECK_THROWS_AS(level_set_seeds(sys, -1.0), LevelSetError);
  CHECK_THROWS_AS(level_set_seeds(sys, 1.0, {0, 64.0, 4096}), PreconditionError);
  // deterministic
  const auto again = level_set_seeds(sys, 2.0);
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(max_abs(seeds[i] - again[i]) == 0.0);
}

TEST_CASE("input validation and divergence") {
  const auto sys = harmonic(1);
  CHECK_THROWS_AS(integrate_flow(sys, point({1.0, 0.0}), 1.0, 0.0), PreconditionError);
  CHECK_THROWS_AS(integrate_monodromy(sys, point({1.0, 0.0}), 1.0, 0), PreconditionError);
  CHECK_THROWS_AS(detect_closed_orbit(sys, point({0.0, 0.0})), PreconditionError);
  CHECK_THROWS_AS(orbit_with_period(sys, point({1.0, 0.0}), -1.0, 64), PreconditionError);

  const auto traj = integrate_flow(sys, point({1.0, 0.0}), 1.0, 0.01);
  CHECK_THROWS_AS(action_integral(sys, std::span<const double>(traj.times.data(), 8),
                                  std::span<const Vec>(traj.states.data(), 8)),
                  ResolutionError);
  auto times = traj.times;
  times[3] += 0.01;
  CHECK_THROWS_AS(action_integral(sys, times, traj.states), PreconditionError);

  // dp/dt = p^2 blows up at t = 1
  const auto blow = custom("p^2 q", 1);
  try {
    (void)integrate_flow(blow, point({1.0, 0.0}), 5.0, 1e-3);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.last_valid_time() > 0.9);
    CHECK(e.last_valid_time() < 5.0);
  }
}

}  // TEST_SUITE
