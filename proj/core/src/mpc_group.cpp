#include "mpcq/mpc_group.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mpcq {

MpcParameters MpcParameters::make(SpElement g, Complex mu, double tol) {
  const double modulus = std::abs(mu * mu * det_c(g));
  if (!(std::abs(modulus - 1.0) < tol)) {
    throw Error("MpcParameters: |mu^2 Det_C C_g| = " + std::to_string(modulus) + ", expected 1");
  }
  return MpcParameters{std::move(g), mu};
}

MpcParameters MpcParameters::identity(int n) { return MpcParameters{SpElement::identity(n), {1.0, 0.0}}; }

Complex eta(const MpcParameters& a) { return a.mu * a.mu * det_c(a.g); }

MpcParameters central_mul(const MpcParameters& a, Complex lambda) {
  if (!(std::abs(std::abs(lambda) - 1.0) < 1e-10)) {
    throw Error("central_mul: lambda must lie in U(1)");
  }
  return MpcParameters{a.g, a.mu * lambda};
}

MpcParameters epsilon(int n) {
  if (n < 1) throw DimensionError("epsilon: n must be positive");
  return MpcParameters{SpElement::identity(n), {n % 2 == 0 ? 1.0 : -1.0, 0.0}};
}

double accumulated_argument(std::span<const Complex> z) {
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!(std::abs(z[k]) > kZeroFloor)) {
      throw ZeroCrossingError("winding: sample " + std::to_string(k) + " is too close to 0");
    }
    if (k == 0) continue;
    const double step = std::arg(z[k] / z[k - 1]);
    if (!(std::abs(step) < kBranchGuard)) {
      throw RefineNeeded("winding: argument jump " + std::to_string(step) + " at sample " + std::to_string(k), k);
    }
    total += step;
  }
  return total;
}

int winding_number(std::span<const Complex> z, bool closed, double closure_tol) {
  if (z.empty()) return 0;
  if (closed && std::abs(z.back() - z.front()) > closure_tol * std::max(1.0, std::abs(z.front()))) {
    throw NonClosedPathError("winding: path marked closed but endpoints differ by " +
                             std::to_string(std::abs(z.back() - z.front())));
  }
  return static_cast<int>(std::lround(accumulated_argument(z) / (2.0 * std::numbers::pi)));
}

LiftedPath mp_lift_loop(std::span<const SpElement> samples, std::span<const double> times, double closure_tol) {
  if (samples.size() < 2) throw ResolutionError("mp_lift_loop: need at least two samples");
  if (times.size() != samples.size()) throw DimensionError("mp_lift_loop: times and samples differ in length");
  if (max_abs(samples.front().matrix() - samples.back().matrix()) > closure_tol) {
    throw NonClosedPathError("mp_lift_loop: loop does not close");
  }
  std::vector<Complex> dets;
  dets.reserve(samples.size());
  for (const auto& g : samples) dets.push_back(det_c(g));

  LiftedPath out;
  out.times.assign(times.begin(), times.end());
  out.g_samples.assign(samples.begin(), samples.end());
  out.mu_samples.reserve(dets.size());

  // mu = |d|^{-1/2} exp(-i theta / 2) along the continuous argument theta.
  double theta = std::arg(dets.front());
  out.mu_samples.push_back(std::polar(1.0 / std::sqrt(std::abs(dets.front())), -0.5 * theta));
  for (std::size_t k = 1; k < dets.size(); ++k) {
    const double step = std::arg(dets[k] / dets[k - 1]);
    if (!(std::abs(step) < kBranchGuard)) {
      throw RefineNeeded("mp_lift_loop: argument jump at sample " + std::to_string(k), k);
    }
    theta += step;
    out.mu_samples.push_back(std::polar(1.0 / std::sqrt(std::abs(dets[k])), -0.5 * theta));
  }
  out.winding = static_cast<int>(std::lround((theta - std::arg(dets.front())) / (2.0 * std::numbers::pi)));
  out.end_parity = (out.winding % 2 == 0) ? 1 : -1;
  return out;
}

LiftedPath mp_lift_loop(const std::function<Mat(double)>& path, double t0, double t1, int samples,
                        int max_doublings, double closure_tol) {
  if (samples < 2) throw ResolutionError("mp_lift_loop: need at least two samples");
  int count = samples;
  for (int attempt = 0;; ++attempt) {
    std::vector<SpElement> gs;
    std::vector<double> ts;
    gs.reserve(static_cast<std::size_t>(count) + 1);
    for (int k = 0; k <= count; ++k) {
      const double t = (k == count) ? t1 : t0 + (t1 - t0) * k / count;
      ts.push_back(t);
      gs.push_back(SpElement::trusted(path(t)));
    }
    try {
      return mp_lift_loop(gs, ts, closure_tol);
    } catch (const RefineNeeded&) {
      if (attempt >= max_doublings) throw;
      count *= 2;
    }
  }
}

}  // namespace mpcq
