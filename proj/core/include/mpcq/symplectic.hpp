#pragma once

// Linear symplectic algebra on the model space V = R^{2n}.
//
// Basis ordering is (x_1..x_n, y_1..y_n). The symplectic form and the complex
// structure share the block matrix [[0, I], [-I, 0]]; V is identified with C^n
// through (a, b) -> b + i a, so a J-commuting real matrix [[A, B], [-B, A]]
// is the complex matrix A + iB.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "mpcq/errors.hpp"

namespace mpcq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kSymplecticTol = 1e-9;
inline constexpr double kPivotFloor = 1e-10;
inline constexpr double kDetFloor = 1e-12;
inline constexpr double kAdaptedTol = 1e-7;

/// Largest absolute entry; the norm used for every matrix defect in the library.
double max_abs(const Mat& m);

Mat standard_omega(int n);
Mat complex_structure(int n);

struct ModelSpace {
  explicit ModelSpace(int half_dim);

  int n;
  Mat omega;
  Mat J;

  int dim() const { return 2 * n; }
  /// <v,w> = Omega(Jv, w) + i Omega(v, w) is Hermitian positive-definite.
  bool is_compatible(double tol = 1e-12) const;
};

/// A real 2n x 2n symplectic matrix. n may be 0 (the trivial quotient group).
class SpElement {
 public:
  SpElement() = default;

  static SpElement identity(int n);
  /// Validates squareness, even dimension and symplecticity.
  static SpElement from_matrix(Mat m, double tol = kSymplecticTol);
  /// Wraps a numerically produced matrix whose defect is tracked by the caller.
  static SpElement trusted(Mat m);

  const Mat& matrix() const { return mat_; }
  int half_dim() const { return static_cast<int>(mat_.rows() / 2); }
  double defect() const;

  SpElement operator*(const SpElement& other) const;
  SpElement inverse() const;

 private:
  explicit SpElement(Mat m) : mat_(std::move(m)) {}
  Mat mat_;
};

double omega_pairing(const Vec& v, const Vec& w);

/// max |g^T Omega g - Omega|; throws DimensionError for non-square or odd sizes.
double symplectic_defect(const Mat& g);
bool is_symplectic(const Mat& g, double tol = kSymplecticTol);

/// g^{-1} = -Omega g^T Omega, exact for symplectic g.
Mat symplectic_inverse(const Mat& g);

/// Real form of C_g = (g - JgJ)/2; commutes with J.
Mat cayley_component_real(const Mat& g);
CMat cayley_component(const Mat& g);
inline CMat cayley_component(const SpElement& g) { return cayley_component(g.matrix()); }

CMat to_complex(const Mat& j_linear);
Mat from_complex(const CMat& z);

/// Complex determinant of C_g. Returns 1 for the 0 x 0 case.
Complex det_c(const Mat& g);
inline Complex det_c(const SpElement& g) { return det_c(g.matrix()); }

/// Choice of the codimension-one coisotropic subspace W of V.
///
/// Stored as a symplectic "adapted basis" Q: column 0 spans W^perp, column n
/// is its symplectic dual (the one direction not in W) and the remaining
/// columns map onto a standard symplectic basis of W/W^perp. In adapted
/// coordinates (g' = Q^{-1} g Q) the subspace indices are fixed:
/// W = all but slot n, W^perp = slot 0, quotient = slots [1, n-1] and [n+1, 2n-1].
class CoisotropicConvention {
 public:
  /// W^perp = span{x_1}, W = span{x_1..x_n, y_2..y_n}.
  static CoisotropicConvention standard(int n);
  /// W^perp = span{y_1 + ... + y_n}, the polar-coordinate choice.
  static CoisotropicConvention diagonal(int n);
  static CoisotropicConvention from_basis(Mat adapted_basis);

  int n() const { return static_cast<int>(basis_.rows() / 2); }
  const Mat& basis() const { return basis_; }
  const Mat& basis_inverse() const { return inverse_; }
  bool is_standard() const { return standard_; }

  int wperp_index() const { return 0; }
  int dual_index() const { return n(); }
  std::vector<int> w_indices() const;
  std::vector<int> quotient_indices() const;

  Vec wperp_vector() const { return basis_.col(0); }
  Mat to_adapted(const Mat& g) const;

 private:
  CoisotropicConvention(Mat basis, bool standard);
  Mat basis_;
  Mat inverse_;
  bool standard_ = false;
};

/// max of the entries that must vanish for g W = W and g W^perp = W^perp,
/// measured in adapted coordinates.
double adapted_defect(const Mat& g, const CoisotropicConvention& conv);

/// Scalar by which g scales W^perp. Throws NotAdaptedError when g does not preserve it.
double chi(const Mat& g, const CoisotropicConvention& conv, double tol = kAdaptedTol);
inline double chi(const SpElement& g, const CoisotropicConvention& conv, double tol = kAdaptedTol) {
  return chi(g.matrix(), conv, tol);
}

/// Induced map on W/W^perp in the quotient basis. Throws NotAdaptedError when g W is not in W.
Mat nu_matrix(const Mat& g, const CoisotropicConvention& conv, double tol = kAdaptedTol);
SpElement nu(const SpElement& g, const CoisotropicConvention& conv, double tol = kAdaptedTol);

/// Deterministic alternatives for the Gram-Schmidt reference vectors (2n x (n-1) each).
std::vector<Mat> reference_candidates(int n);
Mat default_reference(int n);

struct FrameBuild {
  Mat frame;
  double min_pivot = 0.0;
};

/// Symplectic frame B with B W^perp = span{xi} and B W = ker dH.
///
/// Column x_1 is xi/|xi| and column y_1 is the gradient scaled so the pair has
/// Omega-pairing 1. The remaining pairs come from symplectic Gram-Schmidt of
/// the reference vectors (each completed by its -J companion), then the frame
/// is expressed in the convention's adapted basis.
FrameBuild adapted_frame_build(const Vec& grad_h, const Vec& xi, const CoisotropicConvention& conv,
                               const Mat& reference, double pivot_floor = kPivotFloor);
SpElement adapted_frame(const Vec& grad_h, const Vec& xi, const CoisotropicConvention& conv,
                        const Mat& reference);

}  // namespace mpcq
