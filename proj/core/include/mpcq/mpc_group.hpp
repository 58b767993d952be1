#pragma once

// The metaplectic-c group in its parameter representation (g, mu) with
// sigma(a) = g and eta(a) = mu^2 Det_C C_g. Only central multiplication and
// continuous lifting of matrix loops are provided; the general group law is
// not needed by any algorithm here.

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "mpcq/symplectic.hpp"

namespace mpcq {

struct MpcParameters {
  SpElement g;
  Complex mu{1.0, 0.0};

  /// Checks |mu^2 Det_C C_g| = 1 within tol.
  static MpcParameters make(SpElement g, Complex mu, double tol = 1e-8);
  static MpcParameters identity(int n);
};

Complex eta(const MpcParameters& a);

/// Parameters of a * lambda for lambda in U(1): (g, mu * lambda).
MpcParameters central_mul(const MpcParameters& a, Complex lambda);

/// epsilon_n = (I, e^{-i pi n}); exactly (I, 1) for even n and (I, -1) for odd n.
MpcParameters epsilon(int n);

inline constexpr double kBranchGuard = 1.5707963267948966;  // pi / 2
inline constexpr double kZeroFloor = 1e-12;

/// Continuous argument accumulated along the samples. Throws RefineNeeded when
/// a single step moves the argument by pi/2 or more, ZeroCrossingError when a
/// sample is too close to 0.
double accumulated_argument(std::span<const Complex> z);

/// Accumulated argument / 2 pi rounded to the nearest integer. With closed = true
/// the first and last samples must agree to closure_tol (relative to |z_0|).
int winding_number(std::span<const Complex> z, bool closed, double closure_tol = 1e-8);

struct LiftedPath {
  std::vector<double> times;
  std::vector<SpElement> g_samples;
  std::vector<Complex> mu_samples;
  int end_parity = 1;
  int winding = 0;
};

/// Lift of a closed sampled loop in Sp(V) to Mp(V): mu(t) is the continuous
/// branch of Det_C C_{g(t)}^{-1/2} starting from the principal root at t_0.
/// end_parity = mu(T)/mu(0) = (-1)^winding.
LiftedPath mp_lift_loop(std::span<const SpElement> samples, std::span<const double> times,
                        double closure_tol = 1e-8);

/// Same, for a loop given as a function on [t0, t1]; resamples at doubled
/// resolution (at most max_doublings times) while branch tracking needs it.
LiftedPath mp_lift_loop(const std::function<Mat(double)>& path, double t0, double t1, int samples,
                        int max_doublings = 4, double closure_tol = 1e-8);

}  // namespace mpcq
