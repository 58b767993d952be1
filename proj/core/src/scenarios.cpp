#include "mpcq/scenarios.hpp"

#include <cmath>

namespace mpcq {

namespace {

// s_j = (p_j^2 + q_j^2) / 2 in variables (p_1..p_n, q_1..q_n).
Polynomial action_variable(int n, int j) {
  const Polynomial p = Polynomial::variable(2 * n, j);
  const Polynomial q = Polynomial::variable(2 * n, n + j);
  return (p * p + q * q) * 0.5;
}

}  // namespace

Polynomial harmonic_polynomial(int n) {
  if (n < 1) throw DimensionError("harmonic: n must be positive");
  Polynomial h(2 * n);
  for (int j = 0; j < n; ++j) h = h + action_variable(n, j);
  return h;
}

HamiltonianSystem harmonic(int n, double hbar) {
  return HamiltonianSystem::from_polynomial(harmonic_polynomial(n), "harmonic", hbar);
}

HamiltonianSystem shifted_harmonic(int n, double k, double hbar) {
  return HamiltonianSystem::from_polynomial(harmonic_polynomial(n) - Polynomial::constant(2 * n, k),
                                            "shifted_harmonic", hbar);
}

HamiltonianSystem product_hamiltonian(double k, double hbar) {
  const Polynomial s1 = action_variable(2, 0), s2 = action_variable(2, 1);
  const Polynomial h1 = s1 + s2 - Polynomial::constant(4, k);
  const Polynomial c = s1 + s2 * 2.0 + Polynomial::constant(4, 1.0);
  return HamiltonianSystem::from_polynomial(h1 * c, "product_hamiltonian", hbar);
}

HamiltonianSystem composed(const HamiltonianSystem& base, const Polynomial& f) {
  if (!base.polynomial) throw PreconditionError("composed: base Hamiltonian must be polynomial");
  if (f.nvars() != 1) throw DimensionError("composed: f must be univariate");
  return HamiltonianSystem::from_polynomial(base.polynomial->compose_into(f), "composed", base.hbar);
}

HamiltonianSystem custom(const std::string& polynomial_text, int n, double hbar) {
  return HamiltonianSystem::from_polynomial(Polynomial::parse_phase_space(polynomial_text, n), "custom", hbar);
}

Mat polar_frame(const std::vector<double>& s0, double tau) {
  const int n = static_cast<int>(s0.size());
  if (n < 1) throw DimensionError("polar_frame: empty radius vector");
  Mat g = Mat::Zero(2 * n, 2 * n);
  const double c = std::cos(tau), s = std::sin(tau);
  for (int j = 0; j < n; ++j) {
    if (!(s0[static_cast<std::size_t>(j)] > 0.0)) throw PreconditionError("polar_frame: radii must be positive");
    const double r = std::sqrt(2.0 * s0[static_cast<std::size_t>(j)]);
    g(j, j) = c / r;
    g(j, n + j) = s / r;
    g(n + j, j) = -r * s;
    g(n + j, n + j) = r * c;
  }
  return g;
}

double polar_constant(const std::vector<double>& s0) {
  double k = 1.0;
  for (double s : s0) {
    const double r = std::sqrt(2.0 * s);
    k *= 0.5 * (r + 1.0 / r);
  }
  return k;
}

Mat kappa_matrix() {
  Mat k = Mat::Zero(4, 4);
  k(2, 0) = -2.0;
  k(2, 1) = -3.0;
  k(3, 0) = -3.0;
  k(3, 1) = -4.0;
  return k;
}

Mat exp_kappa(double t) { return Mat::Identity(4, 4) + t * kappa_matrix(); }

}  // namespace mpcq
