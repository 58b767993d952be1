#include <doctest.h>

#include <random>

#include "mpcq/errors.hpp"
#include "mpcq/polynomial.hpp"

using namespace mpcq;

namespace {

double eval(const Polynomial& p, std::vector<double> x) { return p.eval(x); }

}  // namespace

TEST_SUITE("polynomial") {

TEST_CASE("parse phase-space expressions") {
  const Polynomial h = Polynomial::parse_phase_space("0.5*(p1^2 + q1^2) + 0.5*(p2^2+q2^2)", 2);
  CHECK(h.nvars() == 4);
  CHECK(h.degree() == 2);
  CHECK(h.terms().size() == 4);
  // variable order is p1, p2, q1, q2
  CHECK(eval(h, {1.0, 0.0, 0.0, 0.0}) == doctest::Approx(0.5));
  CHECK(eval(h, {0.0, 0.0, 0.0, 2.0}) == doctest::Approx(2.0));

  const Polynomial g = Polynomial::parse_phase_space("p^2 - 3 q", 1);
  CHECK(eval(g, {2.0, 1.0}) == doctest::Approx(1.0));
  CHECK(eval(Polynomial::parse_phase_space("-p1 + 2(q1 - 1)^2", 1), {1.0, 3.0}) == doctest::Approx(7.0));
  CHECK(eval(Polynomial::parse_phase_space("- -p", 1), {4.0, 0.0}) == doctest::Approx(4.0));
}

TEST_CASE("parse univariate with implicit multiplication") {
  const Polynomial f = Polynomial::parse_univariate("x^3+2x");
  CHECK(f.degree() == 3);
  for (double x : {-1.5, 0.0, 0.3, 2.0}) CHECK(eval(f, {x}) == doctest::Approx(x * x * x + 2 * x));
  CHECK(eval(Polynomial::parse_univariate("3"), {7.0}) == doctest::Approx(3.0));
  CHECK(Polynomial::parse_univariate("x - x").is_zero());
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Polynomial::parse_phase_space("p3", 2), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_phase_space("p", 2), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_phase_space("p1 +", 1), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_phase_space("(p1", 1), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_phase_space("p1^-1", 1), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_phase_space("sin(p1)", 1), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_univariate("y"), ParseError);
  CHECK_THROWS_AS(Polynomial::parse_univariate("x $"), ParseError);
  try {
    (void)Polynomial::parse_univariate("x + z");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("column 5") != std::string::npos);
  }
}

TEST_CASE("derivatives, composition and printing") {
  const Polynomial p = Polynomial::parse_phase_space("p^2 q + 3q^3", 1);
  const Polynomial dp = p.derivative(0), dq = p.derivative(1);
  CHECK(eval(dp, {2.0, 3.0}) == doctest::Approx(12.0));
  CHECK(eval(dq, {2.0, 3.0}) == doctest::Approx(4.0 + 81.0));

  const Polynomial f = Polynomial::parse_univariate("x^2 + 1");
  const Polynomial c = p.compose_into(f);
  const double v = eval(p, {0.7, -0.4});
  CHECK(eval(c, {0.7, -0.4}) == doctest::Approx(v * v + 1.0));
  CHECK_THROWS_AS(p.compose_into(p), DimensionError);

  const Polynomial back = Polynomial::parse_phase_space(p.to_string({"p", "q"}), 1);
  CHECK(back.terms().size() == p.terms().size());
  for (std::size_t i = 0; i < p.terms().size(); ++i) {
    CHECK(back.terms()[i].coeff == p.terms()[i].coeff);
    CHECK(back.terms()[i].exps == p.terms()[i].exps);
  }
  CHECK(Polynomial(2).to_string({"a", "b"}) == "0");
}

TEST_CASE("arithmetic validation") {
  CHECK_THROWS_AS(Polynomial::variable(2, 2), DimensionError);
  CHECK_THROWS_AS(Polynomial(2) + Polynomial(3), DimensionError);
  Polynomial p(2);
  CHECK_THROWS_AS(p.add_term(1.0, {1}), DimensionError);
  CHECK_THROWS_AS(p.eval(std::vector<double>{1.0}), DimensionError);
  p.add_term(0.0, {1, 1});
  CHECK(p.is_zero());
}

TEST_CASE("property: field derivatives match finite differences") {
  const Polynomial p = Polynomial::parse_phase_space("(p1^2 + q1^2 + p2 q2 - 1)(p2^2 + 2 q1 + 1) + p1^3 q2", 2);
  const PolynomialField field(p);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x(4);
    for (auto& xi : x) xi = u(rng);
    CHECK(field.value(x) == doctest::Approx(p.eval(x)).epsilon(1e-13));
    std::vector<double> g(4), h(16);
    field.gradient(x, g);
    field.hessian(x, h);
    const double step = 1e-5;
    for (int i = 0; i < 4; ++i) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(i)] += step;
      xm[static_cast<std::size_t>(i)] -= step;
      const double fd = (p.eval(xp) - p.eval(xm)) / (2 * step);
      CHECK(std::abs(fd - g[static_cast<std::size_t>(i)]) < 1e-7 * (1 + std::abs(fd)));
      std::vector<double> gp(4), gm(4);
      field.gradient(xp, gp);
      field.gradient(xm, gm);
      for (int j = 0; j < 4; ++j) {
        const double fdh = (gp[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(j)]) / (2 * step);
        CHECK(std::abs(fdh - h[static_cast<std::size_t>(i * 4 + j)]) < 1e-6 * (1 + std::abs(fdh)));
      }
    }
  }
}

}  // TEST_SUITE
