#pragma once

// Exact linear algebra of the fiber: the exterior algebra of Q with its
// Clifford module structure, the symbol/quantization pair, the spin^c fiber
// Lambda^{0,*} attached to an orthogonal complex structure, and Clifford
// actions of curvature 2-forms.

#include "tdirac/exact.hpp"
#include "tdirac/matrix.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdirac {

using Mask = std::uint32_t;

namespace detail {

/// (-1)^{number of set bits of mask below position a}
inline int fermion_sign(Mask mask, int a) {
  return (std::popcount(mask & ((Mask(1) << a) - 1)) & 1) ? -1 : 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exterior algebra

/// Element of the complexified exterior algebra of an orthonormal q-frame.
/// Coefficients are indexed by subsets of {0..q-1} encoded as bit masks;
/// the basis element for {s1 < s2 < ...} is f_{s1} ^ f_{s2} ^ ...
class Multivector {
 public:
  explicit Multivector(int q) : q_(q) {
    if (q <= 0 || q % 2 != 0) throw std::invalid_argument("codimension must be even and positive");
    if (q > 16) throw std::invalid_argument("rank too large for a dense multivector");
    coeffs_.resize(std::size_t(1) << q);
  }

  static Multivector scalar(int q, Scalar s) {
    Multivector m(q);
    m.coeffs_[0] = std::move(s);
    return m;
  }
  static Multivector basis(int q, Mask subset) {
    Multivector m(q);
    m.at(subset) = Scalar(1);
    return m;
  }
  /// The frame vector f_a (0-based).
  static Multivector vector(int q, int a) { return basis(q, Mask(1) << a); }

  int rank() const { return q_; }
  std::size_t size() const { return coeffs_.size(); }

  const Scalar& at(Mask s) const {
    if (s >= coeffs_.size()) throw std::out_of_range("multivector subset out of range");
    return coeffs_[s];
  }
  Scalar& at(Mask s) {
    if (s >= coeffs_.size()) throw std::out_of_range("multivector subset out of range");
    return coeffs_[s];
  }

  bool is_zero() const {
    for (const auto& c : coeffs_)
      if (!c.is_zero()) return false;
    return true;
  }

  /// Homogeneous component of the given degree.
  Multivector part(int degree) const {
    Multivector m(q_);
    for (Mask s = 0; s < coeffs_.size(); ++s)
      if (std::popcount(s) == degree) m.coeffs_[s] = coeffs_[s];
    return m;
  }

  /// Highest degree with a nonzero coefficient, or -1 for zero.
  int degree() const {
    int d = -1;
    for (Mask s = 0; s < coeffs_.size(); ++s)
      if (!coeffs_[s].is_zero()) d = std::max(d, std::popcount(s));
    return d;
  }

  Multivector& operator+=(const Multivector& o) {
    check_rank(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      if (!o.coeffs_[i].is_zero()) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Multivector& operator-=(const Multivector& o) {
    check_rank(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      if (!o.coeffs_[i].is_zero()) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  Multivector& operator*=(const Scalar& s) {
    for (auto& c : coeffs_)
      if (!c.is_zero()) c *= s;
    return *this;
  }
  friend Multivector operator+(Multivector a, const Multivector& b) { return a += b; }
  friend Multivector operator-(Multivector a, const Multivector& b) { return a -= b; }
  friend Multivector operator*(const Scalar& s, Multivector a) { return a *= s; }
  Multivector operator-() const { return Scalar(-1) * *this; }
  friend bool operator==(const Multivector& a, const Multivector& b) {
    return a.q_ == b.q_ && a.coeffs_ == b.coeffs_;
  }

  std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (Mask s = 0; s < coeffs_.size(); ++s) {
      if (coeffs_[s].is_zero()) continue;
      if (!first) os << " + ";
      first = false;
      os << "(" << coeffs_[s] << ")";
      for (int a = 0; a < q_; ++a)
        if (s & (Mask(1) << a)) os << "f" << (a + 1);
    }
    return first ? "0" : os.str();
  }

  void check_rank(const Multivector& o) const {
    if (o.q_ != q_) throw std::invalid_argument("rank mismatch");
  }

 private:
  int q_;
  std::vector<Scalar> coeffs_;
};

/// Exterior product by the covector dual to f_a.
inline Multivector exterior(int a, const Multivector& w) {
  if (a < 0 || a >= w.rank()) throw std::out_of_range("frame index out of range");
  Multivector out(w.rank());
  const Mask bit = Mask(1) << a;
  for (Mask s = 0; s < w.size(); ++s) {
    if ((s & bit) || w.at(s).is_zero()) continue;
    Scalar v = w.at(s);
    if (detail::fermion_sign(s, a) < 0) v = -v;
    out.at(s | bit) += v;
  }
  return out;
}

/// Interior product by f_a.
inline Multivector interior(int a, const Multivector& w) {
  if (a < 0 || a >= w.rank()) throw std::out_of_range("frame index out of range");
  Multivector out(w.rank());
  const Mask bit = Mask(1) << a;
  for (Mask s = 0; s < w.size(); ++s) {
    if (!(s & bit) || w.at(s).is_zero()) continue;
    Scalar v = w.at(s);
    if (detail::fermion_sign(s, a) < 0) v = -v;
    out.at(s ^ bit) += v;
  }
  return out;
}

/// Clifford action of a frame vector on forms: c(f_a) = eps_{f_a^*} - i_{f_a}.
inline Multivector lambda_action(int a, const Multivector& w) { return exterior(a, w) - interior(a, w); }

inline Multivector wedge(const Multivector& x, const Multivector& y) {
  x.check_rank(y);
  Multivector out(x.rank());
  for (Mask s = 0; s < x.size(); ++s) {
    if (x.at(s).is_zero()) continue;
    for (Mask t = 0; t < y.size(); ++t) {
      if ((s & t) || y.at(t).is_zero()) continue;
      // Sign of merging the sorted index lists s and t.
      int swaps = 0;
      for (int b = 0; b < x.rank(); ++b)
        if (t & (Mask(1) << b)) swaps += std::popcount(s >> (b + 1));
      Scalar v = x.at(s) * y.at(t);
      if (swaps & 1) v = -v;
      out.at(s | t) += v;
    }
  }
  return out;
}

/// Matrix of eps_{f_a^*} on the 2^q-dimensional exterior algebra.
inline ComplexMatrix exterior_matrix(int q, int a) {
  const std::size_t dim = std::size_t(1) << q;
  ComplexMatrix m(dim, dim);
  const Mask bit = Mask(1) << a;
  for (Mask s = 0; s < dim; ++s)
    if (!(s & bit)) m(s | bit, s) = Scalar(detail::fermion_sign(s, a));
  return m;
}

inline ComplexMatrix interior_matrix(int q, int a) {
  const std::size_t dim = std::size_t(1) << q;
  ComplexMatrix m(dim, dim);
  const Mask bit = Mask(1) << a;
  for (Mask s = 0; s < dim; ++s)
    if (s & bit) m(s ^ bit, s) = Scalar(detail::fermion_sign(s, a));
  return m;
}

// ---------------------------------------------------------------------------
// Clifford algebra via its symbol

/// Element of Cl(Q) stored through its symbol sigma(a) = c(a) 1.
class CliffordElement {
 public:
  explicit CliffordElement(Multivector symbol) : symbol_(std::move(symbol)) {}
  static CliffordElement one(int q) { return CliffordElement(Multivector::scalar(q, Scalar(1))); }
  static CliffordElement generator(int q, int a) { return CliffordElement(Multivector::vector(q, a)); }

  int rank() const { return symbol_.rank(); }
  const Multivector& symbol() const { return symbol_; }

  friend CliffordElement operator+(const CliffordElement& x, const CliffordElement& y) {
    return CliffordElement(x.symbol_ + y.symbol_);
  }
  friend CliffordElement operator-(const CliffordElement& x, const CliffordElement& y) {
    return CliffordElement(x.symbol_ - y.symbol_);
  }
  friend CliffordElement operator*(const Scalar& s, const CliffordElement& x) {
    return CliffordElement(s * x.symbol_);
  }
  friend bool operator==(const CliffordElement& x, const CliffordElement& y) { return x.symbol_ == y.symbol_; }

 private:
  Multivector symbol_;
};

inline Multivector symbol(const CliffordElement& a) { return a.symbol(); }
inline CliffordElement quantize(const Multivector& w) { return CliffordElement(w); }

/// Action of a Clifford element on forms: c(a) w, with a quantized from its
/// symbol, c(f_{s1} ^ ... ^ f_{sk}) = c(f_{s1}) ... c(f_{sk}).
inline Multivector clifford_act(const CliffordElement& a, const Multivector& w) {
  a.symbol().check_rank(w);
  Multivector out(w.rank());
  for (Mask s = 0; s < a.symbol().size(); ++s) {
    const Scalar& coeff = a.symbol().at(s);
    if (coeff.is_zero()) continue;
    Multivector term = w;
    for (int b = w.rank() - 1; b >= 0; --b)
      if (s & (Mask(1) << b)) term = lambda_action(b, term);
    out += coeff * term;
  }
  return out;
}

/// Clifford product; sigma(a b) = c(a) sigma(b).
inline CliffordElement clifford_mul(const CliffordElement& a, const CliffordElement& b) {
  if (a.rank() != b.rank()) throw std::invalid_argument("rank mismatch");
  return CliffordElement(clifford_act(a, b.symbol()));
}

/// Left multiplication by a on the exterior algebra, as a 2^q matrix.
inline ComplexMatrix clifford_matrix(const CliffordElement& a) {
  const int q = a.rank();
  const std::size_t dim = std::size_t(1) << q;
  ComplexMatrix m(dim, dim);
  for (Mask t = 0; t < dim; ++t) {
    Multivector col = clifford_act(a, Multivector::basis(q, t));
    for (Mask s = 0; s < dim; ++s) m(s, t) = col.at(s);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Complex structure and the spin^c fiber

/// Orthogonal J with J^2 = -1 together with an exactly orthonormal adapted
/// frame g_1, g_2 = J g_1, g_3, g_4 = J g_3, ... (columns of adapted_frame()).
class ComplexStructure {
 public:
  /// J = O J0 O^T for an orthogonal O, where J0 g_{2j-1} = g_{2j}.
  static ComplexStructure from_frame(const RealMatrix& frame) {
    check_orthogonal(frame, "adapted frame");
    const std::size_t q = frame.rows();
    if (q == 0 || q % 2) throw std::invalid_argument("codimension must be even");
    RealMatrix j0 = standard(static_cast<int>(q));
    return ComplexStructure(frame * j0 * frame.transpose(), frame);
  }

  /// Validates J and searches an exact adapted frame over Q(sqrt 2).
  static ComplexStructure from_matrix(const RealMatrix& j) {
    const std::size_t q = j.rows();
    if (!j.square() || q == 0 || q % 2) throw std::invalid_argument("codimension must be even");
    if (!(j * j == -RealMatrix::identity(q))) throw std::invalid_argument("invalid complex structure: J^2 != -1");
    check_orthogonal(j, "complex structure");
    return ComplexStructure(j, find_adapted_frame(j));
  }

  static ComplexStructure standard_structure(int q) { return from_frame(RealMatrix::identity(q)); }

  /// J0 with J0 e_{2j-1} = e_{2j}.
  static RealMatrix standard(int q) {
    RealMatrix j0(q, q);
    for (int k = 0; k + 1 < q; k += 2) {
      j0(k + 1, k) = QSqrt2(1);
      j0(k, k + 1) = QSqrt2(-1);
    }
    return j0;
  }

  int q() const { return static_cast<int>(j_.rows()); }
  int l() const { return q() / 2; }
  const RealMatrix& matrix() const { return j_; }
  const RealMatrix& adapted_frame() const { return frame_; }

  ComplexStructure negated() const {
    RealMatrix f = frame_;
    // Swapping g_{2j-1} <-> g_{2j} adapts the frame to -J.
    for (std::size_t r = 0; r < f.rows(); ++r)
      for (std::size_t k = 0; k + 1 < f.cols(); k += 2) std::swap(f(r, k), f(r, k + 1));
    return ComplexStructure(-j_, f);
  }

 private:
  ComplexStructure(RealMatrix j, RealMatrix frame) : j_(std::move(j)), frame_(std::move(frame)) {}

  static void check_orthogonal(const RealMatrix& m, const char* what) {
    if (!m.square() || !(m.transpose() * m == RealMatrix::identity(m.rows())))
      throw std::invalid_argument(std::string("invalid ") + what + ": not orthogonal");
  }

  static RealMatrix find_adapted_frame(const RealMatrix& j) {
    const std::size_t q = j.rows();
    std::vector<std::vector<QSqrt2>> frame;
    auto dot = [q](const std::vector<QSqrt2>& x, const std::vector<QSqrt2>& y) {
      QSqrt2 s;
      for (std::size_t i = 0; i < q; ++i)
        if (!x[i].is_zero() && !y[i].is_zero()) s += x[i] * y[i];
      return s;
    };
    // Candidates: e_a, then e_a +- e_b.
    std::vector<std::vector<QSqrt2>> candidates;
    for (std::size_t a = 0; a < q; ++a) {
      std::vector<QSqrt2> v(q);
      v[a] = QSqrt2(1);
      candidates.push_back(v);
    }
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = a + 1; b < q; ++b)
        for (int s : {1, -1}) {
          std::vector<QSqrt2> v(q);
          v[a] = QSqrt2(1);
          v[b] = QSqrt2(s);
          candidates.push_back(v);
        }
    for (const auto& cand : candidates) {
      if (frame.size() == q) break;
      std::vector<QSqrt2> v = cand;
      for (const auto& g : frame) {
        const QSqrt2 c = dot(cand, g);
        if (c.is_zero()) continue;
        for (std::size_t i = 0; i < q; ++i) v[i] -= c * g[i];
      }
      const QSqrt2 n2 = dot(v, v);
      if (n2.is_zero()) continue;
      auto n = n2.sqrt();
      if (!n) continue;
      for (auto& x : v) x /= *n;
      std::vector<QSqrt2> jv(q);
      for (std::size_t r = 0; r < q; ++r)
        for (std::size_t c = 0; c < q; ++c)
          if (!j(r, c).is_zero() && !v[c].is_zero()) jv[r] += j(r, c) * v[c];
      frame.push_back(v);
      frame.push_back(jv);
    }
    if (frame.size() != q)
      throw std::invalid_argument("complex structure has no exact adapted frame over Q(sqrt2)");
    RealMatrix out(q, q);
    for (std::size_t c = 0; c < q; ++c)
      for (std::size_t r = 0; r < q; ++r) out(r, c) = frame[c][r];
    return out;
  }

  RealMatrix j_, frame_;
};

/// The fiber Lambda^{0,*} = Lambda(Q^{(0,1)*}) of dimension 2^l, tensored
/// with a twist of dimension r. Index layout: subset_mask * r + twist_index.
struct SpinorFiber {
  int l = 1;
  int twist = 1;

  std::size_t dimension() const { return (std::size_t(1) << l) * static_cast<std::size_t>(twist); }
  bool is_odd(std::size_t index) const { return std::popcount(static_cast<Mask>(index / twist)) & 1; }

  std::vector<std::size_t> indices(bool odd) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dimension(); ++i)
      if (is_odd(i) == odd) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> even_indices() const { return indices(false); }
  std::vector<std::size_t> odd_indices() const { return indices(true); }
  /// Lambda^{0,0} tensor twist.
  std::vector<std::size_t> vacuum_indices() const {
    std::vector<std::size_t> out;
    for (int t = 0; t < twist; ++t) out.push_back(static_cast<std::size_t>(t));
    return out;
  }

  ComplexMatrix grading() const {
    ComplexMatrix g(dimension(), dimension());
    for (std::size_t i = 0; i < dimension(); ++i) g(i, i) = Scalar(is_odd(i) ? -1 : 1);
    return g;
  }
};

/// Creation operator for the (0,1)-covector of mode k on Lambda(C^l).
inline ComplexMatrix creation_matrix(int l, int k) {
  const std::size_t dim = std::size_t(1) << l;
  ComplexMatrix m(dim, dim);
  const Mask bit = Mask(1) << k;
  for (Mask s = 0; s < dim; ++s)
    if (!(s & bit)) m(s | bit, s) = Scalar(detail::fermion_sign(s, k));
  return m;
}

inline ComplexMatrix annihilation_matrix(int l, int k) {
  const std::size_t dim = std::size_t(1) << l;
  ComplexMatrix m(dim, dim);
  const Mask bit = Mask(1) << k;
  for (Mask s = 0; s < dim; ++s)
    if (s & bit) m(s ^ bit, s) = Scalar(detail::fermion_sign(s, k));
  return m;
}

/// c(f) = sqrt2 (eps_{f_{1,0}^*} - i_{f_{0,1}}) on Lambda^{0,*}. In the adapted
/// unitary frame w_j = (g_{2j-1} - i g_{2j})/sqrt2 this is
/// sum_j (a_{2j-1} + i a_{2j}) eps_j - (a_{2j-1} - i a_{2j}) iota_j with a = O^T f.
inline FiberEndo spinor_action(const std::vector<QSqrt2>& f, const ComplexStructure& j) {
  const int q = j.q();
  if (static_cast<int>(f.size()) != q) throw std::invalid_argument("vector rank mismatch");
  const RealMatrix& frame = j.adapted_frame();
  std::vector<QSqrt2> a(q);
  for (int b = 0; b < q; ++b)
    for (int r = 0; r < q; ++r)
      if (!frame(r, b).is_zero() && !f[r].is_zero()) a[b] += frame(r, b) * f[r];
  const int l = j.l();
  ComplexMatrix c((std::size_t(1) << l), (std::size_t(1) << l));
  for (int k = 0; k < l; ++k) {
    const Scalar z(a[2 * k], a[2 * k + 1]);
    if (z.is_zero()) continue;
    c += creation_matrix(l, k) * z;
    c -= annihilation_matrix(l, k) * z.conj();
  }
  return c;
}

/// c(f_alpha) for every standard frame vector, tensored with the identity on the twist.
inline std::vector<FiberEndo> spinor_generators(const ComplexStructure& j, int twist = 1) {
  std::vector<FiberEndo> out;
  const ComplexMatrix id = ComplexMatrix::identity(static_cast<std::size_t>(twist));
  for (int a = 0; a < j.q(); ++a) {
    std::vector<QSqrt2> f(j.q());
    f[a] = QSqrt2(1);
    FiberEndo c = spinor_action(f, j);
    out.push_back(twist == 1 ? c : kron(c, id));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curvature 2-forms

/// Skew-symmetric, purely imaginary q x q matrix B_{ab} = R^L(f_a, f_b).
class TwoForm {
 public:
  explicit TwoForm(ComplexMatrix b) : b_(std::move(b)) {
    if (!b_.square()) throw std::invalid_argument("two-form must be square");
    for (std::size_t r = 0; r < b_.rows(); ++r)
      for (std::size_t c = 0; c < b_.cols(); ++c) {
        if (!b_(r, c).is_zero() && !b_(r, c).re.is_zero())
          throw std::invalid_argument("two-form entries must be purely imaginary");
        if (!(b_(r, c) == -b_(c, r))) throw std::invalid_argument("two-form is not skew-symmetric");
      }
  }

  /// q = 2 form with B_12 = -i mu.
  static TwoForm planar(const QSqrt2& mu) {
    ComplexMatrix b(2, 2);
    b(0, 1) = Scalar(QSqrt2(), -mu);
    b(1, 0) = Scalar(QSqrt2(), mu);
    return TwoForm(b);
  }

  /// Block-diagonal form with B_{2j-1,2j} = -i mu_j.
  static TwoForm block_diagonal(const std::vector<QSqrt2>& mu) {
    const std::size_t q = 2 * mu.size();
    ComplexMatrix b(q, q);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      b(2 * j, 2 * j + 1) = Scalar(QSqrt2(), -mu[j]);
      b(2 * j + 1, 2 * j) = Scalar(QSqrt2(), mu[j]);
    }
    return TwoForm(b);
  }

  int q() const { return static_cast<int>(b_.rows()); }
  const ComplexMatrix& matrix() const { return b_; }
  const Scalar& operator()(std::size_t a, std::size_t b) const { return b_(a, b); }

  /// K with i R^L(v, w) = g(v, K w); real skew matrix K = i B.
  RealMatrix k_matrix() const {
    RealMatrix k(b_.rows(), b_.cols());
    for (std::size_t r = 0; r < b_.rows(); ++r)
      for (std::size_t c = 0; c < b_.cols(); ++c) k(r, c) = -b_(r, c).im;
    return k;
  }

  /// O^T B O.
  TwoForm conjugated(const RealMatrix& o) const {
    ComplexMatrix oc = complexify(o);
    return TwoForm(complexify(o.transpose()) * b_ * oc);
  }

 private:
  ComplexMatrix b_;
};

/// c(B) = 1/2 sum_{a,b} c(f_a) c(f_b) B_{ab} on Lambda^{0,*} tensor C^twist.
inline FiberEndo two_form_action(const TwoForm& b, const ComplexStructure& j, int twist_dim = 1) {
  if (b.q() != j.q()) throw std::invalid_argument("rank mismatch between two-form and complex structure");
  if (twist_dim < 1) throw std::invalid_argument("twist dimension must be positive");
  const auto c = spinor_generators(j);
  const std::size_t dim = c.front().rows();
  ComplexMatrix out(dim, dim);
  for (int a = 0; a < b.q(); ++a)
    for (int bb = a + 1; bb < b.q(); ++bb) {
      if (b(a, bb).is_zero()) continue;
      // The (a,b) and (b,a) terms combine to c_a c_b B_ab since c_b c_a = -c_a c_b.
      out += (c[a] * c[bb]) * b(a, bb);
    }
  return twist_dim == 1 ? out : kron(out, ComplexMatrix::identity(twist_dim));
}

struct SkewInvariants {
  std::vector<QSqrt2> mu;  // descending
  QSqrt2 lambda;           // sum of mu
  QSqrt2 m;                // min mu
};

namespace detail {

inline std::optional<Rational> rationalize(double x, long max_den = 1000000, double tol = 1e-9) {
  // Continued-fraction convergents.
  const double target = x;
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(r);
    if (std::abs(fl) > 1e15) break;
    const long a = static_cast<long>(fl);
    const long h2 = a * h1 + h0, k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - target) <= tol * std::max(1.0, std::abs(target))) {
      Rational out(h1, k1);
      out.canonicalize();
      return out;
    }
    const double frac = r - fl;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace detail

/// Eigenvalues +-i mu_j of K (i R^L(v,w) = g(v, Kw)); lambda = sum mu_j,
/// m = min mu_j. Candidates are located numerically and then verified exactly
/// through ranks of -K^2 - mu^2; results are exact or an error is raised.
inline SkewInvariants skew_invariants(const TwoForm& b) {
  const int q = b.q();
  const RealMatrix k = b.k_matrix();
  const RealMatrix m2 = k.transpose() * k;  // = -K^2, eigenvalues mu_j^2 (each twice)
  if (rank(m2) < static_cast<std::size_t>(q)) throw std::domain_error("degenerate curvature");

  Eigen::MatrixXd md(q, q);
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) md(r, c) = m2(r, c).to_double();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(md);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + q);

  SkewInvariants out;
  std::size_t covered = 0;
  std::size_t i = 0;
  while (i < ev.size()) {
    std::size_t jend = i + 1;
    while (jend < ev.size() && std::abs(ev[jend] - ev[i]) <= 1e-7 * std::max(1.0, std::abs(ev[i]))) ++jend;
    const std::size_t mult = jend - i;
    auto nu = detail::rationalize(ev[i]);
    if (!nu || mult % 2) throw std::domain_error("curvature spectrum not exactly representable");
    RealMatrix shifted = m2 - RealMatrix::identity(q) * QSqrt2(*nu);
    if (rank(shifted) != static_cast<std::size_t>(q) - mult)
      throw std::domain_error("curvature spectrum not exactly representable");
    auto mu = QSqrt2(*nu).sqrt();
    if (!mu) throw std::domain_error("curvature spectrum not exactly representable");
    for (std::size_t t = 0; t < mult / 2; ++t) out.mu.push_back(*mu);
    covered += mult;
    i = jend;
  }
  if (covered != static_cast<std::size_t>(q)) throw std::domain_error("curvature spectrum not exactly representable");
  std::sort(out.mu.begin(), out.mu.end(), [](const QSqrt2& x, const QSqrt2& y) { return y < x; });
  for (const auto& mu : out.mu) out.lambda += mu;
  out.m = out.mu.back();
  return out;
}

/// Compatibility of (B, J): B(J., J.) = B and i B(v, J v) > 0 for v != 0.
inline bool is_compatible(const TwoForm& b, const ComplexStructure& j) {
  if (b.q() != j.q()) return false;
  const ComplexMatrix jc = complexify(j.matrix());
  if (!(complexify(j.matrix().transpose()) * b.matrix() * jc == b.matrix())) return false;
  const RealMatrix kj = b.k_matrix() * j.matrix();
  const RealMatrix sym = (kj + kj.transpose()) * QSqrt2(Rational(1, 2));
  return is_positive_semidefinite(complexify(sym)) && rank(sym) == static_cast<std::size_t>(b.q());
}

inline void require_compatible(const TwoForm& b, const ComplexStructure& j) {
  if (!is_compatible(b, j)) throw std::invalid_argument("incompatible (B, J): J must preserve B and iB(v, Jv) > 0");
}

/// max |c(R^L) u + lambda u| over the Lambda^{0,0} tensor twist block, without
/// the compatibility check.
inline QSqrt2 rl1_residual_unchecked(const TwoForm& b, const ComplexStructure& j, int twist_dim = 1) {
  const SkewInvariants inv = skew_invariants(b);
  const FiberEndo c = two_form_action(b, j, twist_dim);
  const SpinorFiber fiber{j.l(), twist_dim};
  std::vector<std::size_t> all(fiber.dimension());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  FiberEndo shifted = c + ComplexMatrix::identity(fiber.dimension()) * Scalar(inv.lambda);
  return max_magnitude(submatrix(shifted, all, fiber.vacuum_indices()));
}

/// Residual of c(R^L) u = -lambda u on Lambda^{0,0} tensor twist; exact.
inline QSqrt2 check_rl1(const TwoForm& b, const ComplexStructure& j, int twist_dim = 1) {
  require_compatible(b, j);
  return rl1_residual_unchecked(b, j, twist_dim);
}

struct OddBound {
  double min_eigenvalue = 0;      // of c(R^L) on the odd part
  QSqrt2 min_eigenvalue_exact;    // valid when exact
  QSqrt2 bound;                   // -(lambda - 2m)
  QSqrt2 margin;                  // min_eigenvalue + (lambda - 2m), valid when exact
  bool exact = false;
  bool holds = false;             // margin >= 0, proven exactly when `exact`
};

/// Lower bound (c(R^L)u, u) >= -(lambda - 2m)|u|^2 on the odd part. The
/// candidate minimum 2m - lambda is certified exactly: c(R^L)|odd - (2m -
/// lambda) must be positive semidefinite and singular.
inline OddBound odd_lower_bound(const TwoForm& b, const ComplexStructure& j, int twist_dim = 1) {
  require_compatible(b, j);
  const SkewInvariants inv = skew_invariants(b);
  const FiberEndo c = two_form_action(b, j, twist_dim);
  const SpinorFiber fiber{j.l(), twist_dim};
  const auto odd = fiber.odd_indices();
  const FiberEndo h = submatrix(c, odd, odd);

  OddBound out;
  out.bound = -(inv.lambda - 2 * inv.m);
  const QSqrt2 candidate = 2 * inv.m - inv.lambda;
  const FiberEndo shifted = h - ComplexMatrix::identity(odd.size()) * Scalar(candidate);
  if (is_positive_semidefinite(shifted) && rank(shifted) < odd.size()) {
    out.exact = true;
    out.min_eigenvalue_exact = candidate;
    out.min_eigenvalue = candidate.to_double();
    out.margin = candidate + (inv.lambda - 2 * inv.m);
    out.holds = out.margin.sign() >= 0;
    return out;
  }
  // Fallback: numerical minimum, with the bound itself still tested exactly.
  Eigen::MatrixXcd hd(odd.size(), odd.size());
  for (std::size_t r = 0; r < odd.size(); ++r)
    for (std::size_t cc = 0; cc < odd.size(); ++cc) hd(r, cc) = {h(r, cc).re.to_double(), h(r, cc).im.to_double()};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hd);
  out.min_eigenvalue = es.eigenvalues()(0);
  out.margin = QSqrt2();
  const FiberEndo against_bound = h - ComplexMatrix::identity(odd.size()) * Scalar(out.bound);
  out.holds = is_positive_semidefinite(against_bound);
  return out;
}

// ---------------------------------------------------------------------------
// Random compatible pairs

/// Random rational orthogonal matrix: a product of Givens rotations with
/// Pythagorean angles (cos, sin) = ((1-t^2), 2t)/(1+t^2), t rational.
inline RealMatrix random_rational_orthogonal(int q, std::mt19937_64& rng) {
  RealMatrix o = RealMatrix::identity(q);
  std::uniform_int_distribution<int> plane(0, q - 1);
  std::uniform_int_distribution<int> num(-3, 3), den(1, 4);
  const int rotations = q * (q - 1) / 2 + 1;
  for (int it = 0; it < rotations; ++it) {
    int a = plane(rng), b = plane(rng);
    if (a == b) continue;
    const Rational t(num(rng), den(rng));
    Rational tt = t;
    tt.canonicalize();
    const Rational d = 1 + tt * tt;
    const QSqrt2 cs((1 - tt * tt) / d), sn(2 * tt / d);
    for (int r = 0; r < q; ++r) {
      const QSqrt2 x = o(r, a), y = o(r, b);
      o(r, a) = cs * x - sn * y;
      o(r, b) = sn * x + cs * y;
    }
  }
  if (std::uniform_int_distribution<int>(0, 1)(rng)) {
    const int c = plane(rng);
    for (int r = 0; r < q; ++r) o(r, c) = -o(r, c);
  }
  return o;
}

struct CompatiblePair {
  TwoForm b;
  ComplexStructure j;
  std::vector<QSqrt2> mu;  // generator values, in block order
};

/// J = O J0 O^T and B = O B0(mu) O^T with mu_j > 0 rational.
inline CompatiblePair random_compatible_pair(int q, std::mt19937_64& rng) {
  if (q <= 0 || q % 2) throw std::invalid_argument("codimension must be even");
  const RealMatrix o = random_rational_orthogonal(q, rng);
  std::uniform_int_distribution<int> num(1, 12), den(1, 4);
  std::vector<QSqrt2> mu;
  for (int k = 0; k < q / 2; ++k) {
    Rational r(num(rng), den(rng));
    r.canonicalize();
    mu.emplace_back(r);
  }
  const TwoForm b0 = TwoForm::block_diagonal(mu);
  const TwoForm b = b0.conjugated(o.transpose());
  return {b, ComplexStructure::from_frame(o), mu};
}

inline std::string matrix_to_string(const ComplexMatrix& m) {
  std::ostringstream os;
  os << "[";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << (r ? ", [" : "[");
    for (std::size_t c = 0; c < m.cols(); ++c) os << (c ? ", \"" : "\"") << m(r, c) << "\"";
    os << "]";
  }
  os << "]";
  return os.str();
}

inline std::string matrix_to_string(const RealMatrix& m) { return matrix_to_string(complexify(m)); }

}  // namespace tdirac
