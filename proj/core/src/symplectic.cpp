#include "mpcq/symplectic.hpp"

#include <cmath>
#include <string>

namespace mpcq {

namespace {

void require_even_square(const Mat& g, const char* what) {
  if (g.rows() != g.cols() || g.rows() % 2 != 0) {
    throw DimensionError(std::string(what) + ": expected a square matrix of even size, got " +
                         std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
  }
}

// Omega(u, v) for the standard form without materialising the matrix.
double pair(const Vec& u, const Vec& v, int n) {
  return u.head(n).dot(v.tail(n)) - u.tail(n).dot(v.head(n));
}

// J v with J = [[0, I], [-I, 0]].
Vec apply_j(const Vec& v, int n) {
  Vec out(2 * n);
  out.head(n) = v.tail(n);
  out.tail(n) = -v.head(n);
  return out;
}

}  // namespace

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Mat standard_omega(int n) {
  Mat omega = Mat::Zero(2 * n, 2 * n);
  omega.topRightCorner(n, n).setIdentity();
  omega.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return omega;
}

Mat complex_structure(int n) { return standard_omega(n); }

ModelSpace::ModelSpace(int half_dim) : n(half_dim) {
  if (half_dim < 1) throw DimensionError("ModelSpace: n must be positive");
  omega = standard_omega(n);
  J = complex_structure(n);
}

bool ModelSpace::is_compatible(double tol) const {
  if (max_abs(J * J + Mat::Identity(dim(), dim())) > tol) return false;
  // Real part of the Hermitian form is Omega(Jv, w) = v^T J^T Omega w.
  Mat g = J.transpose() * omega;
  if (max_abs(g - g.transpose()) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat> eig(g);
  return eig.eigenvalues().minCoeff() > tol;
}

SpElement SpElement::identity(int n) { return SpElement(Mat::Identity(2 * n, 2 * n)); }

SpElement SpElement::from_matrix(Mat m, double tol) {
  require_even_square(m, "SpElement");
  const double d = symplectic_defect(m);
  if (!(d < tol)) {
    throw Error("SpElement: matrix is not symplectic (defect " + std::to_string(d) + ")");
  }
  return SpElement(std::move(m));
}

SpElement SpElement::trusted(Mat m) {
  require_even_square(m, "SpElement");
  return SpElement(std::move(m));
}

double SpElement::defect() const { return symplectic_defect(mat_); }

SpElement SpElement::operator*(const SpElement& other) const {
  if (mat_.rows() != other.mat_.rows()) throw DimensionError("SpElement product: size mismatch");
  return SpElement(mat_ * other.mat_);
}

SpElement SpElement::inverse() const { return SpElement(symplectic_inverse(mat_)); }

double omega_pairing(const Vec& v, const Vec& w) {
  if (v.size() != w.size() || v.size() % 2 != 0) {
    throw DimensionError("omega_pairing: vectors must share an even length");
  }
  return pair(v, w, static_cast<int>(v.size() / 2));
}

double symplectic_defect(const Mat& g) {
  require_even_square(g, "symplectic_defect");
  if (g.size() == 0) return 0.0;
  const Mat omega = standard_omega(static_cast<int>(g.rows() / 2));
  return max_abs(g.transpose() * omega * g - omega);
}

bool is_symplectic(const Mat& g, double tol) { return symplectic_defect(g) < tol; }

Mat symplectic_inverse(const Mat& g) {
  require_even_square(g, "symplectic_inverse");
  if (g.size() == 0) return g;
  const Mat omega = standard_omega(static_cast<int>(g.rows() / 2));
  return -omega * g.transpose() * omega;
}

Mat cayley_component_real(const Mat& g) {
  require_even_square(g, "cayley_component");
  if (g.size() == 0) return g;
  const Mat j = complex_structure(static_cast<int>(g.rows() / 2));
  return 0.5 * (g - j * g * j);
}

CMat to_complex(const Mat& c) {
  require_even_square(c, "to_complex");
  const int n = static_cast<int>(c.rows() / 2);
  CMat z(n, n);
  z.real() = c.topLeftCorner(n, n);
  z.imag() = c.topRightCorner(n, n);
  return z;
}

Mat from_complex(const CMat& z) {
  const auto n = z.rows();
  Mat c(2 * n, 2 * n);
  c.topLeftCorner(n, n) = z.real();
  c.topRightCorner(n, n) = z.imag();
  c.bottomLeftCorner(n, n) = -z.imag();
  c.bottomRightCorner(n, n) = z.real();
  return c;
}

CMat cayley_component(const Mat& g) {
  require_even_square(g, "cayley_component");
  const int n = static_cast<int>(g.rows() / 2);
  // Blocks of (g - JgJ)/2 for g = [[P, Q], [R, S]]: A = (P + S)/2, B = (Q - R)/2.
  CMat z(n, n);
  z.real() = 0.5 * (g.topLeftCorner(n, n) + g.bottomRightCorner(n, n));
  z.imag() = 0.5 * (g.topRightCorner(n, n) - g.bottomLeftCorner(n, n));
  return z;
}

Complex det_c(const Mat& g) {
  if (g.size() == 0) return {1.0, 0.0};
  const Complex d = cayley_component(g).determinant();
  if (std::abs(d) < kDetFloor) {
    throw Error("det_c: |Det_C C_g| below 1e-12; matrix is not numerically symplectic");
  }
  return d;
}

CoisotropicConvention::CoisotropicConvention(Mat basis, bool standard)
    : basis_(std::move(basis)), standard_(standard) {
  inverse_ = symplectic_inverse(basis_);
}

CoisotropicConvention CoisotropicConvention::standard(int n) {
  if (n < 1) throw DimensionError("CoisotropicConvention: n must be positive");
  return CoisotropicConvention(Mat::Identity(2 * n, 2 * n), true);
}

CoisotropicConvention CoisotropicConvention::diagonal(int n) {
  if (n < 1) throw DimensionError("CoisotropicConvention: n must be positive");
  // Orthonormal O with first column (1,...,1)/sqrt(n); the rest are
  // Gram-Schmidt of the successive differences e_j - e_{j+1}.
  Mat o = Mat::Zero(n, n);
  o.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (int j = 1; j < n; ++j) {
    Vec v = Vec::Zero(n);
    v(j - 1) = 1.0;
    v(j) = -1.0;
    for (int k = 0; k < j; ++k) v -= o.col(k).dot(v) * o.col(k);
    o.col(j) = v.normalized();
  }
  Mat rot = Mat::Zero(2 * n, 2 * n);
  rot.topLeftCorner(n, n) = o;
  rot.bottomRightCorner(n, n) = o;
  // -Omega sends x_j -> y_j and y_j -> -x_j, so column 0 becomes O e_1 in the y block.
  Mat q = rot * (-standard_omega(n));
  return CoisotropicConvention(std::move(q), false);
}

CoisotropicConvention CoisotropicConvention::from_basis(Mat adapted_basis) {
  require_even_square(adapted_basis, "CoisotropicConvention");
  if (!is_symplectic(adapted_basis, 1e-9)) {
    throw Error("CoisotropicConvention: adapted basis must be symplectic");
  }
  const bool standard = max_abs(adapted_basis - Mat::Identity(adapted_basis.rows(), adapted_basis.cols())) == 0.0;
  return CoisotropicConvention(std::move(adapted_basis), standard);
}

std::vector<int> CoisotropicConvention::w_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < 2 * n(); ++i)
    if (i != n()) idx.push_back(i);
  return idx;
}

std::vector<int> CoisotropicConvention::quotient_indices() const {
  std::vector<int> idx;
  for (int i = 1; i < n(); ++i) idx.push_back(i);
  for (int i = n() + 1; i < 2 * n(); ++i) idx.push_back(i);
  return idx;
}

Mat CoisotropicConvention::to_adapted(const Mat& g) const {
  if (g.rows() != basis_.rows() || g.cols() != basis_.cols()) {
    throw DimensionError("CoisotropicConvention: matrix size does not match the model space");
  }
  if (standard_) return g;
  return inverse_ * g * basis_;
}

double adapted_defect(const Mat& g, const CoisotropicConvention& conv) {
  const Mat a = conv.to_adapted(g);
  const int n = conv.n();
  double worst = 0.0;
  for (int j = 0; j < 2 * n; ++j) {
    if (j != n) worst = std::max(worst, std::abs(a(n, j)));  // g W in W
    if (j != 0) worst = std::max(worst, std::abs(a(j, 0)));  // g W^perp in W^perp
  }
  return worst;
}

double chi(const Mat& g, const CoisotropicConvention& conv, double tol) {
  const Mat a = conv.to_adapted(g);
  const double scale = std::max(1.0, max_abs(a));
  for (int i = 1; i < a.rows(); ++i) {
    if (std::abs(a(i, 0)) > tol * scale) {
      throw NotAdaptedError("chi: matrix does not preserve W^perp (entry " + std::to_string(a(i, 0)) + ")");
    }
  }
  if (a(0, 0) == 0.0) throw NotAdaptedError("chi: matrix annihilates W^perp");
  return a(0, 0);
}

Mat nu_matrix(const Mat& g, const CoisotropicConvention& conv, double tol) {
  const Mat a = conv.to_adapted(g);
  const int n = conv.n();
  const double scale = std::max(1.0, max_abs(a));
  for (int j = 0; j < 2 * n; ++j) {
    if (j != n && std::abs(a(n, j)) > tol * scale) {
      throw NotAdaptedError("nu: matrix does not map W into W (entry " + std::to_string(a(n, j)) + ")");
    }
  }
  const auto idx = conv.quotient_indices();
  const auto m = static_cast<Eigen::Index>(idx.size());
  Mat q(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) q(r, c) = a(idx[r], idx[c]);
  return q;
}

SpElement nu(const SpElement& g, const CoisotropicConvention& conv, double tol) {
  return SpElement::trusted(nu_matrix(g.matrix(), conv, tol));
}

Mat default_reference(int n) {
  Mat ref = Mat::Zero(2 * n, std::max(0, n - 1));
  for (int j = 1; j < n; ++j) ref(j, j - 1) = 1.0;  // x_2 .. x_n
  return ref;
}

std::vector<Mat> reference_candidates(int n) {
  std::vector<Mat> out;
  if (n < 2) {
    out.push_back(Mat::Zero(2 * n, 0));
    return out;
  }
  // Drop one of x_1..x_n in turn (x_1 first), keeping the rest in order.
  for (int drop = 0; drop < n; ++drop) {
    Mat ref = Mat::Zero(2 * n, n - 1);
    int col = 0;
    for (int j = 0; j < n; ++j) {
      if (j == drop) continue;
      ref(j, col++) = 1.0;
    }
    out.push_back(ref);
  }
  // Rotated copies: a fixed orthogonal mixing of the x block, applied to each subset.
  Mat o = Mat::Identity(n, n);
  for (int j = 0; j + 1 < n; ++j) {
    const double a = 0.7 + 0.3 * j;
    Mat r = Mat::Identity(n, n);
    r(j, j) = std::cos(a);
    r(j, j + 1) = -std::sin(a);
    r(j + 1, j) = std::sin(a);
    r(j + 1, j + 1) = std::cos(a);
    o = r * o;
  }
  const std::size_t base = out.size();
  for (std::size_t k = 0; k < base; ++k) {
    Mat ref = out[k];
    ref.topRows(n) = o * ref.topRows(n);
    out.push_back(ref);
  }
  return out;
}

FrameBuild adapted_frame_build(const Vec& grad_h, const Vec& xi, const CoisotropicConvention& conv,
                               const Mat& reference, double pivot_floor) {
  const int n = conv.n();
  if (grad_h.size() != 2 * n || xi.size() != 2 * n) throw DimensionError("adapted_frame: vector size mismatch");
  if (reference.rows() != 2 * n || reference.cols() != n - 1) {
    throw DimensionError("adapted_frame: reference must be 2n x (n-1)");
  }
  const double xi_norm = xi.norm();
  if (!(xi_norm > pivot_floor)) throw DegenerateFrameError("adapted_frame: vanishing Hamiltonian vector", xi_norm);

  std::vector<Vec> e(n), f(n);
  e[0] = xi / xi_norm;
  const double s = pair(e[0], grad_h, n);
  if (!(std::abs(s) > pivot_floor)) {
    throw DegenerateFrameError("adapted_frame: Omega(xi, grad H) vanishes (critical point)", std::abs(s));
  }
  f[0] = grad_h / s;

  double min_pivot = std::abs(s);
  auto project = [&](Vec v, int upto) {
    for (int j = 0; j < upto; ++j) v += -pair(v, f[j], n) * e[j] + pair(v, e[j], n) * f[j];
    return v;
  };
  for (int k = 1; k < n; ++k) {
    Vec v = project(reference.col(k - 1), k);
    const double pv = v.norm();
    min_pivot = std::min(min_pivot, pv);
    if (!(pv > pivot_floor)) throw DegenerateFrameError("adapted_frame: reference vector lies in the span of earlier pairs", pv);
    e[k] = v / pv;
    Vec c = project(-apply_j(e[k], n), k);
    const double sc = pair(e[k], c, n);
    min_pivot = std::min(min_pivot, std::abs(sc));
    if (!(std::abs(sc) > pivot_floor)) throw DegenerateFrameError("adapted_frame: companion pivot vanished", std::abs(sc));
    f[k] = c / sc;
  }

  Mat b(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    b.col(j) = e[j];
    b.col(n + j) = f[j];
  }
  if (!conv.is_standard()) b = b * conv.basis_inverse();
  return {std::move(b), min_pivot};
}

SpElement adapted_frame(const Vec& grad_h, const Vec& xi, const CoisotropicConvention& conv,
                        const Mat& reference) {
  return SpElement::trusted(adapted_frame_build(grad_h, xi, conv, reference).frame);
}

}  // namespace mpcq
