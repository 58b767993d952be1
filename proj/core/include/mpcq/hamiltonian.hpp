#pragma once

// Hamiltonian systems on M = R^{2n} with coordinates (p_1..p_n, q_1..q_n) and
// omega = sum dp_j ^ dq_j. The Hamiltonian vector field satisfies
// xi_H -| omega = dH, i.e. xi = (dH/dq, -dH/dp) = J grad H.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mpcq/polynomial.hpp"
#include "mpcq/symplectic.hpp"

namespace mpcq {

/// Linear primitives beta of omega, beta_x(v) = x^T A v.
enum class Primitive {
  Symmetric,  ///< (1/2) sum (p dq - q dp)
  PdQ,        ///< sum p dq
};

Mat primitive_matrix(Primitive kind, int n);
/// Matrix of d(beta) as a bilinear form: A - A^T.
Mat primitive_exterior_derivative(Primitive kind, int n);
double primitive_pairing(Primitive kind, const Vec& x, const Vec& v);

struct HamiltonianSystem {
  using ScalarFn = std::function<double(std::span<const double>)>;
  using VectorFn = std::function<void(std::span<const double>, std::span<double>)>;

  int n = 1;
  std::string name;
  double hbar = 1.0;
  Primitive primitive = Primitive::Symmetric;
  ScalarFn energy_fn;
  VectorFn gradient_fn;  ///< optional; central differences when empty
  VectorFn hessian_fn;   ///< optional, row-major; central differences of the gradient when empty
  std::optional<Polynomial> polynomial;

  static HamiltonianSystem from_polynomial(Polynomial p, std::string name, double hbar = 1.0);

  int dim() const { return 2 * n; }
  double energy(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  void gradient_into(std::span<const double> x, std::span<double> out) const;
  void hessian_into(std::span<const double> x, std::span<double> out) const;
};

Vec hamiltonian_vector_field(const HamiltonianSystem& sys, const Vec& m);
/// D xi = J Hess(H).
Mat vector_field_jacobian(const HamiltonianSystem& sys, const Vec& m);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  double energy_drift = 0.0;  ///< max |H(c(t)) - H(s0)|
};

/// Classical RK4 with ceil(|t_end|/dt) uniform steps.
Trajectory integrate_flow(const HamiltonianSystem& sys, const Vec& s0, double t_end, double dt);

struct MonodromyTrajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Mat> monodromies;  ///< Phi(t_i), Phi(0) = I
  double max_symplectic_defect = 0.0;
};

inline constexpr double kMonodromyDriftLimit = 1e-4;

/// RK4 on the state together with the variational equation dPhi/dt = D xi(c(t)) Phi.
/// Throws StepSizeError when Phi drifts from Sp(V) by more than 1e-4.
MonodromyTrajectory integrate_monodromy(const HamiltonianSystem& sys, const Vec& s0, double t_end, int steps);

struct OrbitOptions {
  double t_max = 100.0;
  double tol_orbit = 1e-8;
  int steps_per_period = 2048;
  int k_max = 8;
  double coarse_return_tol = 1e-2;  ///< relative to 1 + |s0|
  int max_doublings = 3;
};

struct ClosedOrbit {
  Vec s0;
  double period = 0.0;
  int crossings = 1;  ///< section crossings before the return
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Mat> monodromies;
  double closure_residual = 0.0;
  double energy = 0.0;
  double max_symplectic_defect = 0.0;
  double generator_defect = 0.0;  ///< |Phi(T) xi(s0) - xi(s0)|
  int steps() const { return static_cast<int>(times.size()) - 1; }
};

struct NonClosing {
  Vec s0;
  double searched_time = 0.0;
  int crossings_checked = 0;
  std::string reason;
};

using OrbitSearch = std::variant<ClosedOrbit, NonClosing>;

/// First return of the flow to s0 through the hyperplane section normal to
/// xi(s0), checked for up to k_max crossings within t_max. The period is
/// refined by Newton iteration on the crossing time and the final orbit is
/// sampled on a uniform grid with its monodromy matrices.
OrbitSearch detect_closed_orbit(const HamiltonianSystem& sys, const Vec& s0, const OrbitOptions& opts = {});

/// Closed orbit through s0 with a known period, integrated with `steps` uniform steps.
ClosedOrbit orbit_with_period(const HamiltonianSystem& sys, const Vec& s0, double period, int steps,
                              int crossings = 1);

/// Integral of beta(xi_H) over uniformly sampled states (composite Simpson).
double action_integral(const HamiltonianSystem& sys, std::span<const double> times, std::span<const Vec> states);
double action_integral(const HamiltonianSystem& sys, const ClosedOrbit& orbit);

struct SeedOptions {
  int count = 8;
  double r_max = 64.0;
  int radial_samples = 4096;
};

/// Deterministic points on {H = E}: the coordinate directions p_1..p_n first,
/// then Halton directions on the sphere, each scaled radially to the first
/// sign change of H - E away from the origin. Throws LevelSetError when no
/// point is found.
std::vector<Vec> level_set_seeds(const HamiltonianSystem& sys, double energy, const SeedOptions& opts = {});

}  // namespace mpcq
