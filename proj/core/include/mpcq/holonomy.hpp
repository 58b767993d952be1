#pragma once

// Holonomy of the metaplectic-c (MPC) and Kostant-Souriau (KS) connections
// around closed Hamiltonian orbits, evaluated in the global trivialization of
// R^{2n}. For an orbit c with frame loop b(t) adapted to the level set and
// reduced loop Gbar(t) = nu(b(t)^{-1} Phi(t) b(0)) in Sp(W/W^perp):
//
//   MPC:  lambda = (-1)^{w_b + p} exp(i A / hbar)
//   KS:   lambda = exp(i A / hbar)
//
// with A the action integral of beta(xi_H), w_b the winding of Det_C C_{b(t)}
// and p the winding of Det_C C_{Gbar(t)}.

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpcq/hamiltonian.hpp"
#include "mpcq/mpc_group.hpp"
#include "mpcq/symplectic.hpp"

namespace mpcq {

enum class Mode { MPC, KS };
std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct PrequantizationModel {
  HamiltonianSystem sys;
  double hbar = 1.0;
  Mode mode = Mode::MPC;

  static PrequantizationModel make(HamiltonianSystem sys, Mode mode) {
    const double h = sys.hbar;
    return {std::move(sys), h, mode};
  }
};

enum class ConventionKind { Standard, Diagonal };
CoisotropicConvention make_convention(ConventionKind kind, int n);

struct HolonomyOptions {
  OrbitOptions orbit;
  SeedOptions seeds;
  ConventionKind convention = ConventionKind::Standard;
  std::optional<int> reference_index;  ///< force one of reference_candidates(n)
  double tol_reduced = 1e-6;
  double tol_lambda = 1e-6;
  int k_max_loops = 8;
  int max_refinements = 3;
};

struct FrameSection {
  std::vector<double> times;
  std::vector<Mat> frames;
  int reference_index = 0;
  double min_pivot = 0.0;
};

/// Adapted frames b(t_i) along the orbit. Without a forced reference the
/// candidates are tried in order and the first one that stays well
/// conditioned is kept (otherwise the best one); throws DegenerateFrameError
/// when every candidate hits the pivot floor.
FrameSection frame_section(const HamiltonianSystem& sys, const ClosedOrbit& orbit, const CoisotropicConvention& conv,
                           std::optional<int> reference_index = std::nullopt);

/// b(t_i) -> b(t_i) h(t_i). h must be a closed loop in Sp(V;W).
void apply_gauge(FrameSection& section, const std::function<Mat(double)>& h);

struct ReducedLoop {
  int traversals = 1;
  std::vector<double> times;
  std::vector<Mat> frames;       ///< b(t_i)
  std::vector<Mat> transported;  ///< g(t_i) = b(t_i)^{-1} Phi(t_i) B_0
  std::vector<Mat> quotient;     ///< Gbar(t_i) = nu(g(t_i))
  double closure_defect = 0.0;   ///< max |Gbar(T) - I|
  double min_chi = 0.0;
  bool accepted = false;
  double action = 0.0;           ///< action of one traversal of the base orbit
};

/// Transported and reduced loops. Retries with the orbit traversed
/// 2..k_max_loops times when Gbar(T) does not close on the first pass.
ReducedLoop reduced_monodromy_loop(const HamiltonianSystem& sys, const ClosedOrbit& orbit,
                                   const FrameSection& section, const CoisotropicConvention& conv,
                                   const HolonomyOptions& opts = {});

struct HolonomyResult {
  Complex lambda{1.0, 0.0};
  double action = 0.0;  ///< total over all traversals
  int parity_frame = 1;
  int parity_reduced = 1;
  int winding_frame = 0;
  int winding_reduced = 0;
  int traversals = 1;
  Mode mode = Mode::MPC;
  bool trivial = false;
  double tol = 1e-6;
};

/// Throws LoopNotAcceptedError for an MPC evaluation of an unclosed reduced loop.
HolonomyResult holonomy(const PrequantizationModel& model, const ReducedLoop& loop, double tol = 1e-6);

struct OrbitRecord {
  Vec seed;
  double period = 0.0;
  int crossings = 1;
  bool reduced_closed = true;
  double reduced_defect = 0.0;
  int reference_index = 0;
  HolonomyResult holonomy;
};

/// Holonomy of one closed orbit, with resolution doubling when branch
/// tracking or the adapted-subspace checks need it.
OrbitRecord evaluate_orbit(const PrequantizationModel& model, ClosedOrbit orbit, const HolonomyOptions& opts = {});

struct QuantizationReport {
  double energy = 0.0;
  Mode mode = Mode::MPC;
  bool quantized = true;
  std::vector<OrbitRecord> orbits;
  std::vector<Vec> nonclosing_seeds;
  int unclosed_reduced = 0;  ///< closed base orbits whose reduced loop never closed
};

QuantizationReport is_quantized(const PrequantizationModel& model, double energy, const HolonomyOptions& opts = {});

struct ScanPoint {
  double energy = 0.0;
  Complex lambda{0.0, 0.0};
  bool closed = false;
  bool trivial = false;
};

struct ScanReport {
  Mode mode = Mode::MPC;
  std::vector<ScanPoint> points;
  std::vector<double> levels;
};

/// Uniform grid a + i*step for i >= 1 with values <= b (+ rounding slack).
std::vector<double> energy_grid(double a, double b, double step);

/// Representative lambda per grid energy (first level-set seed); levels are
/// trivial grid points plus roots of arg lambda refined between sign changes,
/// each confirmed by a full is_quantized run.
ScanReport energy_scan(const PrequantizationModel& model, const std::vector<double>& grid,
                       const HolonomyOptions& opts = {});

struct ModeComparison {
  ScanReport mpc;
  ScanReport ks;
  std::vector<double> only_mpc;
  std::vector<double> only_ks;
};

ModeComparison compare_modes(const HamiltonianSystem& sys, const std::vector<double>& grid,
                             const HolonomyOptions& opts = {});

/// Symmetric Hausdorff distance between two sampled closed orbits, with cubic
/// Hermite interpolation between samples using the flow velocities.
double orbit_hausdorff(const HamiltonianSystem& sys_a, const ClosedOrbit& a, const HamiltonianSystem& sys_b,
                       const ClosedOrbit& b);

struct InvarianceSeed {
  Vec seed;
  bool closed1 = false;
  bool closed2 = false;
  Complex lambda1{0.0, 0.0};
  Complex lambda2{0.0, 0.0};
  double period1 = 0.0;
  double period2 = 0.0;
  double hausdorff = 0.0;
  bool lambda_match = false;
};

struct InvarianceReport {
  double energy1 = 0.0;
  double energy2 = 0.0;
  bool quantized1 = true;
  bool quantized2 = true;
  std::vector<InvarianceSeed> seeds;
  double max_lambda_gap = 0.0;
  double max_hausdorff = 0.0;
  bool agree = false;
};

inline constexpr double kLevelMatchTol = 1e-8;

/// Compares two Hamiltonians sharing a level set. Seeds come from model1's
/// level set; throws LevelSetError if a seed is off either level by 1e-8.
InvarianceReport invariance_check(const PrequantizationModel& model1, const PrequantizationModel& model2,
                                  double energy1, double energy2, const HolonomyOptions& opts = {});

struct MonodromyDefects {
  double full = 0.0;     ///< max |h - I|, h = B_0^{-1} Phi(T) B_0
  double reduced = 0.0;  ///< max |nu(h) - I|
  Mat h;
};

MonodromyDefects full_vs_reduced_monodromy(const HamiltonianSystem& sys, const ClosedOrbit& orbit,
                                           const CoisotropicConvention& conv);

}  // namespace mpcq
