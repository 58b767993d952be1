#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpcq {

/// Sparse real polynomial in a fixed number of variables.
class Polynomial {
 public:
  struct Term {
    double coeff = 0.0;
    std::vector<int> exps;
  };

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int index);

  /// Maps an identifier to a variable index, or nullopt when unknown.
  using Resolver = std::function<std::optional<int>(const std::string&)>;

  /// Parses sums, products, integer powers and parentheses, e.g.
  /// "0.5*p1^2 + (q1 - 1)^2" or "x^3+2x" (implicit multiplication after a number).
  static Polynomial parse(const std::string& text, int nvars, const Resolver& resolve);
  /// Phase-space polynomial in p1..pn, q1..qn (plain p, q allowed for n = 1).
  static Polynomial parse_phase_space(const std::string& text, int n);
  /// Univariate polynomial in x.
  static Polynomial parse_univariate(const std::string& text);

  int nvars() const { return nvars_; }
  const std::vector<Term>& terms() const { return terms_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }

  double eval(std::span<const double> x) const;
  Polynomial derivative(int var) const;

  /// f(this) for a univariate f.
  Polynomial compose_into(const Polynomial& univariate_f) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  Polynomial pow(int k) const;

  void add_term(double coeff, std::vector<int> exps);
  std::string to_string(const std::vector<std::string>& names) const;

 private:
  void canonicalize();
  int nvars_;
  std::vector<Term> terms_;
};

/// Value, gradient and Hessian of a polynomial, with derivatives expanded once.
class PolynomialField {
 public:
  PolynomialField() = default;
  explicit PolynomialField(Polynomial p);

  const Polynomial& polynomial() const { return poly_; }
  int nvars() const { return poly_.nvars(); }

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  /// Row-major nvars x nvars.
  void hessian(std::span<const double> x, std::span<double> out) const;

 private:
  struct Packed {
    std::vector<double> coeffs;
    std::vector<int> exps;  // coeffs.size() * nvars, row per term
  };
  static Packed pack(const Polynomial& p);
  double eval_packed(const Packed& p, const std::vector<double>& powers) const;
  void fill_powers(std::span<const double> x, std::vector<double>& powers) const;

  Polynomial poly_;
  int max_deg_ = 0;
  Packed value_;
  std::vector<Packed> grad_;
  std::vector<Packed> hess_;
};

}  // namespace mpcq
