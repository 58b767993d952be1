#pragma once

// Built-in Hamiltonians and closed-form reference objects.
//
// With s_j = (p_j^2 + q_j^2) / 2:
//   harmonic            H = s_1 + ... + s_n
//   shifted_harmonic    H = s_1 + ... + s_n - k
//   product_hamiltonian H = (s_1 + s_2 - k)(s_1 + 2 s_2 + 1), n = 2
//   composed            f(H_harmonic) for a univariate polynomial f

#include <string>
#include <vector>

#include "mpcq/hamiltonian.hpp"
#include "mpcq/polynomial.hpp"

namespace mpcq {

Polynomial harmonic_polynomial(int n);

HamiltonianSystem harmonic(int n, double hbar = 1.0);
HamiltonianSystem shifted_harmonic(int n, double k, double hbar = 1.0);
HamiltonianSystem product_hamiltonian(double k, double hbar = 1.0);
HamiltonianSystem composed(const HamiltonianSystem& base, const Polynomial& f);
HamiltonianSystem custom(const std::string& polynomial_text, int n, double hbar = 1.0);

/// Symplectic polar frame at angle tau for radii s0 (all > 0).
Mat polar_frame(const std::vector<double>& s0, double tau);
/// prod_j (sqrt(2 s0j) + 1/sqrt(2 s0j)) / 2.
double polar_constant(const std::vector<double>& s0);

/// Generator of the linearized product flow on its orbit, in polar coordinates.
Mat kappa_matrix();
/// exp(t kappa) in closed form (kappa is nilpotent).
Mat exp_kappa(double t);

}  // namespace mpcq
