#pragma once

// Exact scalars: rationals (GMP), the real quadratic field Q(sqrt 2), and
// complex numbers over an ordered field.

#include <gmpxx.h>

#include <cctype>
#include <compare>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tdirac {

using Rational = mpq_class;

inline int sign(const Rational& r) { return sgn(r); }

/// Exact square root of a non-negative rational, if it is rational.
inline std::optional<Rational> rational_sqrt(const Rational& r) {
  if (sgn(r) < 0) return std::nullopt;
  if (sgn(r) == 0) return Rational(0);
  mpz_class num = r.get_num(), den = r.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
    return std::nullopt;
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), den.get_mpz_t());
  Rational out(sn, sd);
  out.canonicalize();
  return out;
}

/// Element a + b*sqrt(2) of the real field Q(sqrt 2).
class QSqrt2 {
 public:
  QSqrt2() : a_(0), b_(0) {}
  QSqrt2(int a) : a_(a), b_(0) {}          // NOLINT(google-explicit-constructor)
  QSqrt2(long a) : a_(a), b_(0) {}         // NOLINT(google-explicit-constructor)
  QSqrt2(Rational a) : a_(std::move(a)), b_(0) { a_.canonicalize(); }  // NOLINT(google-explicit-constructor)
  QSqrt2(Rational a, Rational b) : a_(std::move(a)), b_(std::move(b)) {
    a_.canonicalize();
    b_.canonicalize();
  }

  static QSqrt2 sqrt2() { return {Rational(0), Rational(1)}; }

  const Rational& rational_part() const { return a_; }
  const Rational& sqrt2_part() const { return b_; }

  bool is_zero() const { return sgn(a_) == 0 && sgn(b_) == 0; }
  bool is_rational() const { return sgn(b_) == 0; }

  int sign() const {
    const int sa = sgn(a_), sb = sgn(b_);
    if (sb == 0) return sa;
    if (sa == 0 || sa == sb) return sb;
    // Opposite signs: compare a^2 with 2 b^2 (never equal for b != 0).
    const Rational lhs = a_ * a_, rhs = 2 * b_ * b_;
    return lhs > rhs ? sa : sb;
  }

  QSqrt2 conjugate() const { return {a_, -b_}; }
  /// Field norm a^2 - 2 b^2.
  Rational norm() const { return a_ * a_ - 2 * b_ * b_; }

  QSqrt2 inverse() const {
    if (is_zero()) throw std::domain_error("division by zero in Q(sqrt2)");
    const Rational n = norm();
    return {a_ / n, -b_ / n};
  }

  QSqrt2& operator+=(const QSqrt2& o) { a_ += o.a_; b_ += o.b_; return *this; }
  QSqrt2& operator-=(const QSqrt2& o) { a_ -= o.a_; b_ -= o.b_; return *this; }
  QSqrt2& operator*=(const QSqrt2& o) {
    if (is_rational() && o.is_rational()) {
      a_ *= o.a_;
      return *this;
    }
    Rational a = a_ * o.a_ + 2 * b_ * o.b_;
    Rational b = a_ * o.b_ + b_ * o.a_;
    a_ = std::move(a);
    b_ = std::move(b);
    return *this;
  }
  QSqrt2& operator/=(const QSqrt2& o) {
    if (o.is_rational()) {
      if (sgn(o.a_) == 0) throw std::domain_error("division by zero in Q(sqrt2)");
      a_ /= o.a_;
      b_ /= o.a_;
      return *this;
    }
    return *this *= o.inverse();
  }

  friend QSqrt2 operator+(QSqrt2 x, const QSqrt2& y) { return x += y; }
  friend QSqrt2 operator-(QSqrt2 x, const QSqrt2& y) { return x -= y; }
  friend QSqrt2 operator*(QSqrt2 x, const QSqrt2& y) { return x *= y; }
  friend QSqrt2 operator/(QSqrt2 x, const QSqrt2& y) { return x /= y; }
  QSqrt2 operator-() const { return {-a_, -b_}; }

  friend bool operator==(const QSqrt2& x, const QSqrt2& y) { return x.a_ == y.a_ && x.b_ == y.b_; }
  friend std::strong_ordering operator<=>(const QSqrt2& x, const QSqrt2& y) {
    const int s = (x - y).sign();
    return s < 0 ? std::strong_ordering::less
                 : (s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  double to_double() const {
    static const double kSqrt2 = 1.4142135623730950488;
    return a_.get_d() + kSqrt2 * b_.get_d();
  }

  /// Exact square root inside Q(sqrt 2), if one exists. Requires *this >= 0.
  std::optional<QSqrt2> sqrt() const {
    if (sign() < 0) return std::nullopt;
    if (is_zero()) return QSqrt2();
    if (is_rational()) {
      if (auto r = rational_sqrt(a_)) return QSqrt2(*r);
      if (auto s = rational_sqrt(a_ / 2)) return QSqrt2(Rational(0), *s);
      return std::nullopt;
    }
    // (x + y sqrt2)^2 = a + b sqrt2  <=>  x^2 + 2y^2 = a, 2xy = b.
    auto d = rational_sqrt(norm());
    if (!d) return std::nullopt;
    for (int s : {1, -1}) {
      const Rational t = (a_ + s * *d) / 2;
      if (sgn(t) <= 0) continue;
      auto x = rational_sqrt(t);
      if (!x) continue;
      QSqrt2 root(*x, b_ / (2 * *x));
      if (root.sign() < 0) root = -root;
      if (root * root == *this) return root;
    }
    return std::nullopt;
  }

  std::string to_string() const {
    if (is_rational()) return a_.get_str();
    std::string out;
    if (sgn(a_) != 0) out = a_.get_str();
    if (sgn(b_) > 0 && !out.empty()) out += "+";
    if (b_ == 1) {
      out += "√2";
    } else if (b_ == -1) {
      out += "-√2";
    } else {
      out += b_.get_str() + "√2";
    }
    return out;
  }

  /// Parses "a/b", "a/b+c/d√2", "√2", "-3/2√2" (also accepts "sqrt2").
  static QSqrt2 parse(std::string_view text);

  friend std::ostream& operator<<(std::ostream& os, const QSqrt2& x) { return os << x.to_string(); }

 private:
  Rational a_, b_;
};

inline bool is_zero(const QSqrt2& x) { return x.is_zero(); }
inline QSqrt2 abs(const QSqrt2& x) { return x.sign() < 0 ? -x : x; }

namespace detail {

inline std::string strip(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

inline Rational parse_rational(const std::string& s) {
  if (s.empty() || s == "+") return Rational(1);
  if (s == "-") return Rational(-1);
  std::string t = s[0] == '+' ? s.substr(1) : s;
  for (char c : t)
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-'))
      throw std::invalid_argument("malformed rational: '" + s + "'");
  Rational r;
  if (r.set_str(t, 10) != 0) throw std::invalid_argument("malformed rational: '" + s + "'");
  if (sgn(r.get_den()) == 0) throw std::invalid_argument("zero denominator: '" + s + "'");
  r.canonicalize();
  return r;
}

}  // namespace detail

inline QSqrt2 QSqrt2::parse(std::string_view text) {
  std::string s = detail::strip(text);
  for (const char* alias : {"sqrt2", "sqrt(2)", "√(2)"}) {
    for (auto pos = s.find(alias); pos != std::string::npos; pos = s.find(alias))
      s.replace(pos, std::string_view(alias).size(), "√2");
  }
  if (s.empty()) throw std::invalid_argument("empty number");
  // Split into signed summands.
  QSqrt2 out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    if (i == s.size() || ((s[i] == '+' || s[i] == '-') && s[i - 1] != '/')) {
      std::string term = s.substr(start, i - start);
      static const std::string kRoot = "√2";
      if (term.size() >= kRoot.size() && term.compare(term.size() - kRoot.size(), kRoot.size(), kRoot) == 0) {
        term.erase(term.size() - kRoot.size());
        if (!term.empty() && term.back() == '*') term.pop_back();
        out += QSqrt2(Rational(0), detail::parse_rational(term));
      } else {
        if (term.empty() || term == "+" || term == "-")
          throw std::invalid_argument("malformed number: '" + std::string(text) + "'");
        out += QSqrt2(detail::parse_rational(term));
      }
      start = i;
    }
  }
  return out;
}

/// Complex number over an ordered field F.
template <class F>
struct Complex {
  F re{}, im{};

  Complex() = default;
  Complex(F r) : re(std::move(r)) {}  // NOLINT(google-explicit-constructor)
  Complex(int r) : re(r) {}           // NOLINT(google-explicit-constructor)
  Complex(F r, F i) : re(std::move(r)), im(std::move(i)) {}

  static Complex i() { return {F(0), F(1)}; }

  bool is_zero() const { return tdirac::is_zero(re) && tdirac::is_zero(im); }
  bool is_real() const { return tdirac::is_zero(im); }
  Complex conj() const { return {re, -im}; }
  F norm2() const { return re * re + im * im; }

  Complex& operator+=(const Complex& o) { re += o.re; im += o.im; return *this; }
  Complex& operator-=(const Complex& o) { re -= o.re; im -= o.im; return *this; }
  Complex& operator*=(const Complex& o) {
    if (tdirac::is_zero(o.im)) {
      re *= o.re;
      im *= o.re;
      return *this;
    }
    if (tdirac::is_zero(im)) {
      im = re * o.im;
      re *= o.re;
      return *this;
    }
    F r = re * o.re - im * o.im;
    F i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
  }
  Complex& operator/=(const Complex& o) {
    const F n = o.norm2();
    if (tdirac::is_zero(n)) throw std::domain_error("complex division by zero");
    *this *= o.conj();
    re /= n;
    im /= n;
    return *this;
  }

  friend Complex operator+(Complex x, const Complex& y) { return x += y; }
  friend Complex operator-(Complex x, const Complex& y) { return x -= y; }
  friend Complex operator*(Complex x, const Complex& y) { return x *= y; }
  friend Complex operator/(Complex x, const Complex& y) { return x /= y; }
  Complex operator-() const { return {-re, -im}; }
  friend bool operator==(const Complex& x, const Complex& y) { return x.re == y.re && x.im == y.im; }

  std::string to_string() const {
    if (tdirac::is_zero(im)) return re.to_string();
    std::string ims = im.to_string();
    std::string imag = (ims == "1" ? "" : (ims == "-1" ? "-" : ims)) + "i";
    if (ims.find_first_of("+", 1) != std::string::npos ||
        (ims.find('-', 1) != std::string::npos))
      imag = "(" + ims + ")i";
    if (tdirac::is_zero(re)) return imag;
    return re.to_string() + (imag[0] == '-' ? "" : "+") + imag;
  }
  friend std::ostream& operator<<(std::ostream& os, const Complex& z) { return os << z.to_string(); }
};

template <class F>
bool is_zero(const Complex<F>& z) {
  return z.is_zero();
}

/// Exact scalar used by the fiber and operator algebra: Q(sqrt2)[i].
using Scalar = Complex<QSqrt2>;

inline Scalar conj(const Scalar& z) { return z.conj(); }
inline double to_double(const QSqrt2& x) { return x.to_double(); }

/// Max-norm magnitude max(|re|, |im|); exact.
inline QSqrt2 magnitude(const Scalar& z) {
  QSqrt2 r = abs(z.re), i = abs(z.im);
  return r < i ? i : r;
}

/// Parses a complex literal: real part and/or imaginary part marked with a
/// trailing 'i' on the summand, e.g. "-i", "1/2-3/2i", "2√2i", "1+(1-√2)i".
inline Scalar parse_scalar(std::string_view text) {
  const std::string s = detail::strip(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  Scalar out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')') --depth;
    const bool split = i == s.size() || (i > start && depth == 0 && (s[i] == '+' || s[i] == '-') &&
                                         s[i - 1] != '/' && s[i - 1] != '(');
    if (!split) continue;
    std::string term = s.substr(start, i - start);
    start = i;
    if (term.empty()) throw std::invalid_argument("malformed complex: '" + std::string(text) + "'");
    if (term.back() != 'i') {
      out.re += QSqrt2::parse(term);
      continue;
    }
    term.pop_back();
    if (!term.empty() && term.back() == '*') term.pop_back();
    QSqrt2 sgn(1);
    if (!term.empty() && (term[0] == '+' || term[0] == '-')) {
      if (term[0] == '-') sgn = QSqrt2(-1);
      term.erase(0, 1);
    }
    QSqrt2 v(1);
    if (!term.empty() && term.front() == '(') {
      if (term.back() != ')') throw std::invalid_argument("malformed complex: '" + std::string(text) + "'");
      v = QSqrt2::parse(term.substr(1, term.size() - 2));
    } else if (!term.empty()) {
      v = QSqrt2::parse(term);
    }
    out.im += sgn * v;
  }
  if (depth != 0) throw std::invalid_argument("malformed complex: '" + std::string(text) + "'");
  return out;
}

}  // namespace tdirac
