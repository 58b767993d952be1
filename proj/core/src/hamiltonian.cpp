#include "mpcq/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>

namespace mpcq {

Mat primitive_matrix(Primitive kind, int n) {
  if (n < 1) throw DimensionError("primitive_matrix: n must be positive");
  Mat a = Mat::Zero(2 * n, 2 * n);
  // Coordinates are (p, q): x^T A v with A[p_j, q_j] = 1 gives p dq.
  if (kind == Primitive::PdQ) {
    a.topRightCorner(n, n).setIdentity();
  } else {
    a.topRightCorner(n, n) = 0.5 * Mat::Identity(n, n);
    a.bottomLeftCorner(n, n) = -0.5 * Mat::Identity(n, n);
  }
  return a;
}

Mat primitive_exterior_derivative(Primitive kind, int n) {
  const Mat a = primitive_matrix(kind, n);
  return a - a.transpose();
}

double primitive_pairing(Primitive kind, const Vec& x, const Vec& v) {
  if (x.size() != v.size() || x.size() % 2 != 0) throw DimensionError("primitive_pairing: size mismatch");
  const int n = static_cast<int>(x.size() / 2);
  const double pdq = x.head(n).dot(v.tail(n));
  if (kind == Primitive::PdQ) return pdq;
  return 0.5 * (pdq - x.tail(n).dot(v.head(n)));
}

HamiltonianSystem HamiltonianSystem::from_polynomial(Polynomial p, std::string name, double hbar) {
  if (p.nvars() % 2 != 0 || p.nvars() == 0) {
    throw DimensionError("from_polynomial: expected a polynomial in 2n variables");
  }
  auto field = std::make_shared<const PolynomialField>(p);
  HamiltonianSystem sys;
  sys.n = p.nvars() / 2;
  sys.name = std::move(name);
  sys.hbar = hbar;
  sys.energy_fn = [field](std::span<const double> x) { return field->value(x); };
  sys.gradient_fn = [field](std::span<const double> x, std::span<double> out) { field->gradient(x, out); };
  sys.hessian_fn = [field](std::span<const double> x, std::span<double> out) { field->hessian(x, out); };
  sys.polynomial = std::move(p);
  return sys;
}

namespace {

double fd_step(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return 1e-6 * (1.0 + std::sqrt(s));
}

void check_size(const HamiltonianSystem& sys, std::size_t size, const char* what) {
  if (static_cast<int>(size) != sys.dim()) {
    throw DimensionError(std::string(what) + ": expected a point of dimension " + std::to_string(sys.dim()));
  }
}

}  // namespace

double HamiltonianSystem::energy(const Vec& x) const {
  check_size(*this, static_cast<std::size_t>(x.size()), "energy");
  return energy_fn(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

void HamiltonianSystem::gradient_into(std::span<const double> x, std::span<double> out) const {
  if (gradient_fn) {
    gradient_fn(x, out);
    return;
  }
  const double h = fd_step(x);
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double keep = y[j];
    y[j] = keep + h;
    const double fp = energy_fn(y);
    y[j] = keep - h;
    const double fm = energy_fn(y);
    y[j] = keep;
    out[j] = (fp - fm) / (2.0 * h);
  }
}

void HamiltonianSystem::hessian_into(std::span<const double> x, std::span<double> out) const {
  if (hessian_fn) {
    hessian_fn(x, out);
    return;
  }
  const std::size_t d = x.size();
  // nested differences need a wider outer step to keep roundoff down
  const double h = gradient_fn ? fd_step(x) : 100.0 * fd_step(x);
  std::vector<double> y(x.begin(), x.end()), gp(d), gm(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double keep = y[j];
    y[j] = keep + h;
    gradient_into(y, gp);
    y[j] = keep - h;
    gradient_into(y, gm);
    y[j] = keep;
    for (std::size_t i = 0; i < d; ++i) out[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
  }
  // symmetrize the difference quotient
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double m = 0.5 * (out[i * d + j] + out[j * d + i]);
      out[i * d + j] = m;
      out[j * d + i] = m;
    }
  }
}

Vec HamiltonianSystem::gradient(const Vec& x) const {
  check_size(*this, static_cast<std::size_t>(x.size()), "gradient");
  Vec g(dim());
  gradient_into(std::span<const double>(x.data(), x.size()), std::span<double>(g.data(), g.size()));
  return g;
}

Mat HamiltonianSystem::hessian(const Vec& x) const {
  check_size(*this, static_cast<std::size_t>(x.size()), "hessian");
  const int d = dim();
  std::vector<double> buf(static_cast<std::size_t>(d * d));
  hessian_into(std::span<const double>(x.data(), x.size()), buf);
  Mat h(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h(i, j) = buf[static_cast<std::size_t>(i * d + j)];
  return h;
}

Vec hamiltonian_vector_field(const HamiltonianSystem& sys, const Vec& m) {
  const Vec g = sys.gradient(m);
  const int n = sys.n;
  Vec xi(2 * n);
  xi.head(n) = g.tail(n);
  xi.tail(n) = -g.head(n);
  return xi;
}

Mat vector_field_jacobian(const HamiltonianSystem& sys, const Vec& m) {
  const Mat h = sys.hessian(m);
  const int n = sys.n;
  Mat a(2 * n, 2 * n);
  a.topRows(n) = h.bottomRows(n);
  a.bottomRows(n) = -h.topRows(n);
  return a;
}

namespace {

// Fixed-step RK4 for the flow, with buffers reused across steps.
class FlowStepper {
 public:
  explicit FlowStepper(const HamiltonianSystem& sys)
      : sys_(sys), d_(sys.dim()), grad_(d_), k1_(d_), k2_(d_), k3_(d_), k4_(d_), tmp_(d_) {}

  void field(const double* x, double* out) {
    sys_.gradient_into(std::span<const double>(x, d_), grad_);
    const int n = sys_.n;
    for (int j = 0; j < n; ++j) {
      out[j] = grad_[static_cast<std::size_t>(n + j)];
      out[n + j] = -grad_[static_cast<std::size_t>(j)];
    }
  }

  void step(double* x, double h) {
    field(x, k1_.data());
    for (int i = 0; i < d_; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    field(tmp_.data(), k2_.data());
    for (int i = 0; i < d_; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    field(tmp_.data(), k3_.data());
    for (int i = 0; i < d_; ++i) tmp_[i] = x[i] + h * k3_[i];
    field(tmp_.data(), k4_.data());
    for (int i = 0; i < d_; ++i) x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

 private:
  const HamiltonianSystem& sys_;
  int d_;
  std::vector<double> grad_, k1_, k2_, k3_, k4_, tmp_;
};

bool all_finite(const double* x, int d) {
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

// RK4 on (x, Phi) with dPhi/dt = J Hess(H)(x) Phi.
class VariationalStepper {
 public:
  explicit VariationalStepper(const HamiltonianSystem& sys)
      : sys_(sys),
        d_(sys.dim()),
        flow_(sys),
        hess_(static_cast<std::size_t>(d_ * d_)),
        a_(d_, d_),
        kx1_(d_), kx2_(d_), kx3_(d_), kx4_(d_), xt_(d_),
        kp1_(d_, d_), kp2_(d_, d_), kp3_(d_, d_), kp4_(d_, d_), pt_(d_, d_) {}

  void jacobian(const double* x) {
    sys_.hessian_into(std::span<const double>(x, d_), hess_);
    const int n = sys_.n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d_; ++j) {
        a_(i, j) = hess_[static_cast<std::size_t>((n + i) * d_ + j)];
        a_(n + i, j) = -hess_[static_cast<std::size_t>(i * d_ + j)];
      }
    }
  }

  void rhs(const double* x, const Mat& phi, double* kx, Mat& kp) {
    flow_.field(x, kx);
    jacobian(x);
    kp.noalias() = a_ * phi;
  }

  void step(double* x, Mat& phi, double h) {
    rhs(x, phi, kx1_.data(), kp1_);
    for (int i = 0; i < d_; ++i) xt_[i] = x[i] + 0.5 * h * kx1_[i];
    pt_ = phi + 0.5 * h * kp1_;
    rhs(xt_.data(), pt_, kx2_.data(), kp2_);
    for (int i = 0; i < d_; ++i) xt_[i] = x[i] + 0.5 * h * kx2_[i];
    pt_ = phi + 0.5 * h * kp2_;
    rhs(xt_.data(), pt_, kx3_.data(), kp3_);
    for (int i = 0; i < d_; ++i) xt_[i] = x[i] + h * kx3_[i];
    pt_ = phi + h * kp3_;
    rhs(xt_.data(), pt_, kx4_.data(), kp4_);
    for (int i = 0; i < d_; ++i) x[i] += h / 6.0 * (kx1_[i] + 2.0 * kx2_[i] + 2.0 * kx3_[i] + kx4_[i]);
    phi += h / 6.0 * (kp1_ + 2.0 * kp2_ + 2.0 * kp3_ + kp4_);
  }

 private:
  const HamiltonianSystem& sys_;
  int d_;
  FlowStepper flow_;
  std::vector<double> hess_;
  Mat a_;
  std::vector<double> kx1_, kx2_, kx3_, kx4_, xt_;
  Mat kp1_, kp2_, kp3_, kp4_, pt_;
};

// End point of `steps` uniform RK4 steps over [0, t_end].
Vec flow_endpoint(const HamiltonianSystem& sys, const Vec& s0, double t_end, int steps) {
  FlowStepper stepper(sys);
  Vec x = s0;
  const double h = t_end / steps;
  for (int k = 0; k < steps; ++k) {
    stepper.step(x.data(), h);
    if (!all_finite(x.data(), sys.dim())) throw IntegrationError("flow diverged", k * h);
  }
  return x;
}

double scale_of(const Vec& s0) { return std::max(1.0, s0.norm()); }

}  // namespace

Trajectory integrate_flow(const HamiltonianSystem& sys, const Vec& s0, double t_end, double dt) {
  check_size(sys, static_cast<std::size_t>(s0.size()), "integrate_flow");
  if (!(dt > 0.0)) throw PreconditionError("integrate_flow: dt must be positive");
  if (!std::isfinite(t_end)) throw PreconditionError("integrate_flow: t_end must be finite");
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t_end) / dt - 1e-12)));
  const double h = t_end / steps;

  Trajectory tr;
  tr.times.reserve(static_cast<std::size_t>(steps) + 1);
  tr.states.reserve(static_cast<std::size_t>(steps) + 1);
  const double e0 = sys.energy(s0);
  FlowStepper stepper(sys);
  Vec x = s0;
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  for (int k = 1; k <= steps; ++k) {
    stepper.step(x.data(), h);
    if (!all_finite(x.data(), sys.dim())) throw IntegrationError("integrate_flow: state diverged", (k - 1) * h);
    tr.times.push_back(k == steps ? t_end : k * h);
    tr.states.push_back(x);
    tr.energy_drift = std::max(tr.energy_drift, std::abs(sys.energy(x) - e0));
  }
  return tr;
}

MonodromyTrajectory integrate_monodromy(const HamiltonianSystem& sys, const Vec& s0, double t_end, int steps) {
  check_size(sys, static_cast<std::size_t>(s0.size()), "integrate_monodromy");
  if (steps < 1) throw PreconditionError("integrate_monodromy: steps must be positive");
  const int d = sys.dim();
  const double h = t_end / steps;

  MonodromyTrajectory out;
  out.times.reserve(static_cast<std::size_t>(steps) + 1);
  out.states.reserve(static_cast<std::size_t>(steps) + 1);
  out.monodromies.reserve(static_cast<std::size_t>(steps) + 1);
  VariationalStepper stepper(sys);
  Vec x = s0;
  Mat phi = Mat::Identity(d, d);
  out.times.push_back(0.0);
  out.states.push_back(x);
  out.monodromies.push_back(phi);
  for (int k = 1; k <= steps; ++k) {
    stepper.step(x.data(), phi, h);
    if (!all_finite(x.data(), d) || !phi.allFinite()) {
      throw IntegrationError("integrate_monodromy: state diverged", (k - 1) * h);
    }
    const double defect = symplectic_defect(phi);
    out.max_symplectic_defect = std::max(out.max_symplectic_defect, defect);
    if (defect > kMonodromyDriftLimit) {
      throw StepSizeError("integrate_monodromy: symplectic drift " + std::to_string(defect) + " at t = " +
                          std::to_string(k * h) + "; reduce the step size");
    }
    out.times.push_back(k == steps ? t_end : k * h);
    out.states.push_back(x);
    out.monodromies.push_back(phi);
  }
  return out;
}

ClosedOrbit orbit_with_period(const HamiltonianSystem& sys, const Vec& s0, double period, int steps, int crossings) {
  if (!(period > 0.0)) throw PreconditionError("orbit_with_period: period must be positive");
  MonodromyTrajectory tr = integrate_monodromy(sys, s0, period, steps);
  ClosedOrbit orbit;
  orbit.s0 = s0;
  orbit.period = period;
  orbit.crossings = crossings;
  orbit.closure_residual = (tr.states.back() - s0).norm();
  orbit.energy = sys.energy(s0);
  orbit.max_symplectic_defect = tr.max_symplectic_defect;
  const Vec xi0 = hamiltonian_vector_field(sys, s0);
  orbit.generator_defect = (tr.monodromies.back() * xi0 - xi0).cwiseAbs().maxCoeff();
  orbit.times = std::move(tr.times);
  orbit.states = std::move(tr.states);
  orbit.monodromies = std::move(tr.monodromies);
  return orbit;
}

namespace {

// Newton refinement of a section return near t_guess; nullopt when the flow
// does not close there.
std::optional<ClosedOrbit> refine_return(const HamiltonianSystem& sys, const Vec& s0, const Vec& xi0,
                                         double t_guess, int crossing, const OrbitOptions& opts) {
  const double scale = scale_of(s0);
  const double xi_scale = std::max(1.0, xi0.cwiseAbs().maxCoeff());
  int steps = opts.steps_per_period * crossing;
  for (int attempt = 0; attempt <= opts.max_doublings; ++attempt, steps *= 2) {
    double t = t_guess;
    Vec x;
    for (int it = 0; it < 12; ++it) {
      x = flow_endpoint(sys, s0, t, steps);
      const double f = xi0.dot(x - s0);
      const double fp = xi0.dot(hamiltonian_vector_field(sys, x));
      if (!(fp > 0.0)) return std::nullopt;
      const double delta = -f / fp;
      t += delta;
      if (!(t > 0.0)) return std::nullopt;
      if (std::abs(delta) < 1e-15 * std::max(1.0, t)) break;
    }
    x = flow_endpoint(sys, s0, t, steps);
    const Vec x_fine = flow_endpoint(sys, s0, t, 2 * steps);
    if ((x_fine - x).norm() > opts.tol_orbit * scale) continue;  // not converged at this resolution
    if ((x - s0).norm() > opts.tol_orbit * scale) return std::nullopt;

    ClosedOrbit orbit = orbit_with_period(sys, s0, t, steps, crossing);
    if (orbit.max_symplectic_defect > 1e-6 || orbit.generator_defect > 1e-6 * xi_scale) continue;
    return orbit;
  }
  throw StepSizeError("detect_closed_orbit: period refinement did not converge after " +
                      std::to_string(opts.max_doublings) + " doublings");
}

}  // namespace

OrbitSearch detect_closed_orbit(const HamiltonianSystem& sys, const Vec& s0, const OrbitOptions& opts) {
  check_size(sys, static_cast<std::size_t>(s0.size()), "detect_closed_orbit");
  if (!(opts.t_max > 0.0) || opts.k_max < 1 || opts.steps_per_period < 16) {
    throw PreconditionError("detect_closed_orbit: invalid options");
  }
  const Vec xi0 = hamiltonian_vector_field(sys, s0);
  if (!(xi0.norm() > 1e-12)) throw PreconditionError("detect_closed_orbit: seed is not a regular point");

  const double w = vector_field_jacobian(sys, s0).norm();
  double dt = opts.t_max / 4096.0;
  if (w > 0.0) dt = std::min(dt, 2.0 * std::numbers::pi / (64.0 * w));
  // keep the coarse step small against the speed of the seed as well
  dt = std::min(dt, 0.05 * scale_of(s0) / xi0.norm());

  const double near = opts.coarse_return_tol * (1.0 + s0.norm());
  FlowStepper stepper(sys);
  Vec x = s0, x_prev = s0;
  double t = 0.0, sigma_prev = 0.0;
  int crossings = 0;
  while (t < opts.t_max) {
    stepper.step(x.data(), dt);
    t += dt;
    if (!all_finite(x.data(), sys.dim())) throw IntegrationError("detect_closed_orbit: flow diverged", t - dt);
    const double sigma = xi0.dot(x - s0);
    if (sigma_prev < 0.0 && sigma >= 0.0) {
      ++crossings;
      const double frac = -sigma_prev / (sigma - sigma_prev);
      const Vec x_cross = x_prev + frac * (x - x_prev);
      const double t_cross = t - dt + frac * dt;
      if ((x_cross - s0).norm() < near) {
        if (auto orbit = refine_return(sys, s0, xi0, t_cross, crossings, opts)) return std::move(*orbit);
      }
      if (crossings >= opts.k_max) {
        return NonClosing{s0, t, crossings, "no return within " + std::to_string(opts.k_max) + " section crossings"};
      }
    }
    sigma_prev = sigma;
    x_prev = x;
  }
  return NonClosing{s0, t, crossings, "no return before t_max"};
}

double action_integral(const HamiltonianSystem& sys, std::span<const double> times, std::span<const Vec> states) {
  const std::size_t m = states.size();
  if (m < 16) throw ResolutionError("action_integral: need at least 16 samples, got " + std::to_string(m));
  if (times.size() != m) throw DimensionError("action_integral: times and states differ in length");
  const std::size_t intervals = m - 1;
  const double h = (times.back() - times.front()) / static_cast<double>(intervals);
  for (std::size_t k = 1; k < m; ++k) {
    if (std::abs((times[k] - times[k - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw PreconditionError("action_integral: samples must be uniform in time");
    }
  }
  std::vector<double> f(m);
  for (std::size_t k = 0; k < m; ++k) {
    f[k] = primitive_pairing(sys.primitive, states[k], hamiltonian_vector_field(sys, states[k]));
  }
  // Simpson on an even number of intervals, closing with the 3/8 rule when odd.
  const std::size_t simpson_end = (intervals % 2 == 0) ? intervals : intervals - 3;
  double sum = 0.0;
  for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) sum += h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
  if (simpson_end != intervals) {
    const std::size_t k = simpson_end;
    sum += 3.0 * h / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
  }
  return sum;
}

double action_integral(const HamiltonianSystem& sys, const ClosedOrbit& orbit) {
  return action_integral(sys, orbit.times, orbit.states);
}

}  // namespace mpcq

namespace mpcq {

namespace {

double radical_inverse(int index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

std::optional<Vec> radial_root(const HamiltonianSystem& sys, const Vec& dir, double energy, const SeedOptions& opts) {
  auto g = [&](double r) { return sys.energy(r * dir) - energy; };
  const double dr = opts.r_max / opts.radial_samples;
  double r0 = dr, g0 = g(r0);
  for (int k = 2; k <= opts.radial_samples; ++k) {
    const double r1 = k * dr, g1 = g(r1);
    if (g0 == 0.0) return Vec(r0 * dir);
    if ((g0 < 0.0) != (g1 < 0.0)) {
      double lo = r0, hi = r1, glo = g0;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi), gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      const double r = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
      return Vec(r * dir);
    }
    r0 = r1;
    g0 = g1;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Vec> level_set_seeds(const HamiltonianSystem& sys, double energy, const SeedOptions& opts) {
  const int d = sys.dim();
  if (opts.count < 1) throw PreconditionError("level_set_seeds: count must be positive");
  if (d > static_cast<int>(std::size(kPrimes))) throw DimensionError("level_set_seeds: dimension too large");
  std::vector<Vec> seeds;
  auto try_dir = [&](Vec dir) {
    dir.normalize();
    if (auto s = radial_root(sys, dir, energy, opts)) {
      if (hamiltonian_vector_field(sys, *s).norm() > 1e-10) seeds.push_back(std::move(*s));
    }
  };
  for (int j = 0; j < sys.n && static_cast<int>(seeds.size()) < opts.count; ++j) {
    try_dir(Vec::Unit(d, j));
  }
  for (int index = 1; static_cast<int>(seeds.size()) < opts.count && index <= 64 * opts.count; ++index) {
    Vec dir(d);
    for (int i = 0; i < d; ++i) dir[i] = 2.0 * radical_inverse(index, kPrimes[i]) - 1.0;
    if (dir.norm() < 0.1) continue;
    try_dir(dir);
  }
  if (seeds.empty()) {
    throw LevelSetError("level_set_seeds: no point with H = " + std::to_string(energy) + " within radius " +
                        std::to_string(opts.r_max));
  }
  return seeds;
}

}  // namespace mpcq
