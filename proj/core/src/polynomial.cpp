#include "mpcq/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "mpcq/errors.hpp"

namespace mpcq {

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(c, std::vector<int>(static_cast<std::size_t>(nvars), 0));
  return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
  if (index < 0 || index >= nvars) throw DimensionError("Polynomial::variable: index out of range");
  std::vector<int> e(static_cast<std::size_t>(nvars), 0);
  e[static_cast<std::size_t>(index)] = 1;
  Polynomial p(nvars);
  p.add_term(1.0, std::move(e));
  return p;
}

void Polynomial::add_term(double coeff, std::vector<int> exps) {
  if (static_cast<int>(exps.size()) != nvars_) throw DimensionError("Polynomial: exponent vector has wrong length");
  if (coeff == 0.0) return;
  terms_.push_back({coeff, std::move(exps)});
  canonicalize();
}

void Polynomial::canonicalize() {
  std::map<std::vector<int>, double> merged;
  for (auto& t : terms_) merged[t.exps] += t.coeff;
  terms_.clear();
  for (auto& [e, c] : merged)
    if (c != 0.0) terms_.push_back({c, e});
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int e : t.exps) s += e;
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != nvars_) throw DimensionError("Polynomial::eval: wrong number of variables");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (int i = 0; i < nvars_; ++i)
      for (int k = 0; k < t.exps[static_cast<std::size_t>(i)]; ++k) v *= x[static_cast<std::size_t>(i)];
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial d(nvars_);
  for (const auto& t : terms_) {
    const int e = t.exps[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    auto exps = t.exps;
    exps[static_cast<std::size_t>(var)] -= 1;
    d.terms_.push_back({t.coeff * e, std::move(exps)});
  }
  d.canonicalize();
  return d;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.nvars_ != nvars_) throw DimensionError("Polynomial: variable count mismatch");
  Polynomial r = *this;
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  r.canonicalize();
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(double s) const {
  Polynomial r = *this;
  for (auto& t : r.terms_) t.coeff *= s;
  r.canonicalize();
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.nvars_ != nvars_) throw DimensionError("Polynomial: variable count mismatch");
  Polynomial r(nvars_);
  for (const auto& a : terms_)
    for (const auto& b : o.terms_) {
      std::vector<int> e(a.exps);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += b.exps[i];
      r.terms_.push_back({a.coeff * b.coeff, std::move(e)});
    }
  r.canonicalize();
  return r;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw ParseError("Polynomial: negative exponent");
  Polynomial r = constant(nvars_, 1.0);
  for (int i = 0; i < k; ++i) r = r * *this;
  return r;
}

Polynomial Polynomial::compose_into(const Polynomial& f) const {
  if (f.nvars() != 1) throw DimensionError("compose_into: outer polynomial must be univariate");
  // Horner over the dense coefficient list of f.
  const int deg = f.degree();
  std::vector<double> c(static_cast<std::size_t>(deg) + 1, 0.0);
  for (const auto& t : f.terms()) c[static_cast<std::size_t>(t.exps[0])] += t.coeff;
  Polynomial r = constant(nvars_, c[static_cast<std::size_t>(deg)]);
  for (int k = deg - 1; k >= 0; --k) r = r * *this + constant(nvars_, c[static_cast<std::size_t>(k)]);
  return r;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& t : terms_) {
    os << (first ? (t.coeff < 0 ? "-" : "") : (t.coeff < 0 ? " - " : " + "));
    os << std::abs(t.coeff);
    for (std::size_t i = 0; i < t.exps.size(); ++i) {
      if (t.exps[i] == 0) continue;
      os << '*' << names.at(i);
      if (t.exps[i] > 1) os << '^' << t.exps[i];
    }
    first = false;
  }
  return os.str();
}

namespace {

class Parser {
 public:
  Parser(const std::string& text, int nvars, const Polynomial::Resolver& resolve)
      : s_(text), nvars_(nvars), resolve_(resolve) {}

  Polynomial run() {
    Polynomial p = expression();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("polynomial \"" + s_ + "\" at column " + std::to_string(pos_ + 1) + ": " + msg);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool starts_factor() {
    skip_ws();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '(' || c == '_';
  }

  Polynomial expression() {
    Polynomial acc(nvars_);
    bool negate = false;
    if (peek('+')) {
      ++pos_;
    } else if (peek('-')) {
      ++pos_;
      negate = true;
    }
    Polynomial t = term();
    acc = negate ? t * -1.0 : t;
    while (true) {
      if (peek('+')) {
        ++pos_;
        acc = acc + term();
      } else if (peek('-')) {
        ++pos_;
        acc = acc - term();
      } else {
        break;
      }
    }
    return acc;
  }

  Polynomial term() {
    Polynomial acc = power();
    while (true) {
      if (peek('*')) {
        ++pos_;
        acc = acc * power();
      } else if (starts_factor()) {
        acc = acc * power();  // implicit multiplication, e.g. "2x" or "2(p+q)"
      } else {
        break;
      }
    }
    return acc;
  }

  Polynomial power() {
    Polynomial base = primary();
    if (peek('^')) {
      ++pos_;
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a non-negative integer exponent");
      base = base.pow(std::stoi(s_.substr(start, pos_ - start)));
    }
    return base;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = expression();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (c == '-') {
      ++pos_;
      return power() * -1.0;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      return Polynomial::constant(nvars_, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      const auto idx = resolve_(name);
      if (!idx) {
        pos_ = start;
        fail("unknown variable '" + name + "'");
      }
      return Polynomial::variable(nvars_, *idx);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
  int nvars_;
  const Polynomial::Resolver& resolve_;
};

}  // namespace

Polynomial Polynomial::parse(const std::string& text, int nvars, const Resolver& resolve) {
  return Parser(text, nvars, resolve).run();
}

Polynomial Polynomial::parse_phase_space(const std::string& text, int n) {
  Resolver r = [n](const std::string& name) -> std::optional<int> {
    if (name.size() < 1 || (name[0] != 'p' && name[0] != 'q')) return std::nullopt;
    const int block = name[0] == 'p' ? 0 : n;
    if (name.size() == 1) return n == 1 ? std::optional<int>(block) : std::nullopt;
    for (std::size_t i = 1; i < name.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
    const int j = std::stoi(name.substr(1));
    if (j < 1 || j > n) return std::nullopt;
    return block + j - 1;
  };
  return parse(text, 2 * n, r);
}

Polynomial Polynomial::parse_univariate(const std::string& text) {
  Resolver r = [](const std::string& name) -> std::optional<int> {
    if (name == "x") return 0;
    return std::nullopt;
  };
  return parse(text, 1, r);
}

PolynomialField::PolynomialField(Polynomial p) : poly_(std::move(p)) {
  const int d = poly_.nvars();
  max_deg_ = 0;
  for (const auto& t : poly_.terms())
    for (int e : t.exps) max_deg_ = std::max(max_deg_, e);
  value_ = pack(poly_);
  grad_.reserve(static_cast<std::size_t>(d));
  hess_.resize(static_cast<std::size_t>(d * d));
  std::vector<Polynomial> first;
  for (int i = 0; i < d; ++i) {
    first.push_back(poly_.derivative(i));
    grad_.push_back(pack(first.back()));
  }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      Packed h = pack(first[static_cast<std::size_t>(i)].derivative(j));
      hess_[static_cast<std::size_t>(i * d + j)] = h;
      hess_[static_cast<std::size_t>(j * d + i)] = h;
    }
}

PolynomialField::Packed PolynomialField::pack(const Polynomial& p) {
  Packed out;
  for (const auto& t : p.terms()) {
    out.coeffs.push_back(t.coeff);
    out.exps.insert(out.exps.end(), t.exps.begin(), t.exps.end());
  }
  return out;
}

void PolynomialField::fill_powers(std::span<const double> x, std::vector<double>& powers) const {
  const int d = poly_.nvars();
  if (static_cast<int>(x.size()) != d) throw DimensionError("PolynomialField: wrong number of variables");
  const int stride = max_deg_ + 1;
  powers.resize(static_cast<std::size_t>(d * stride));
  for (int i = 0; i < d; ++i) {
    double v = 1.0;
    for (int k = 0; k < stride; ++k) {
      powers[static_cast<std::size_t>(i * stride + k)] = v;
      v *= x[static_cast<std::size_t>(i)];
    }
  }
}

double PolynomialField::eval_packed(const Packed& p, const std::vector<double>& powers) const {
  const int d = poly_.nvars();
  const int stride = max_deg_ + 1;
  double sum = 0.0;
  for (std::size_t t = 0; t < p.coeffs.size(); ++t) {
    double v = p.coeffs[t];
    const int* e = &p.exps[t * static_cast<std::size_t>(d)];
    for (int i = 0; i < d; ++i)
      if (e[i] != 0) v *= powers[static_cast<std::size_t>(i * stride + e[i])];
    sum += v;
  }
  return sum;
}

double PolynomialField::value(std::span<const double> x) const {
  thread_local std::vector<double> powers;
  fill_powers(x, powers);
  return eval_packed(value_, powers);
}

void PolynomialField::gradient(std::span<const double> x, std::span<double> out) const {
  thread_local std::vector<double> powers;
  fill_powers(x, powers);
  for (std::size_t i = 0; i < grad_.size(); ++i) out[i] = eval_packed(grad_[i], powers);
}

void PolynomialField::hessian(std::span<const double> x, std::span<double> out) const {
  thread_local std::vector<double> powers;
  fill_powers(x, powers);
  const int d = poly_.nvars();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = eval_packed(hess_[static_cast<std::size_t>(i * d + j)], powers);
      out[static_cast<std::size_t>(i * d + j)] = v;
      out[static_cast<std::size_t>(j * d + i)] = v;
    }
}

}  // namespace mpcq
