#pragma once

// Homogeneous foliated models given by the structure constants of a global
// orthonormal frame u_1..u_p (leafwise e_i), u_{p+1}..u_n (horizontal f_a),
// and every geometric quantity derived from them.

#include "tdirac/clifford_fiber.hpp"

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace tdirac {

/// Structure constants c^k_{ij} with [u_i, u_j] = sum_k c^k_{ij} u_k.
/// Indices are 0-based here; leaves first.
class FrameModel {
 public:
  FrameModel() = default;
  FrameModel(std::string name, int p, int q) : name_(std::move(name)), p_(p), q_(q) {
    if (p < 0 || q < 0 || p + q == 0) throw std::invalid_argument("invalid dimensions");
    c_.assign(static_cast<std::size_t>(n() * n() * n()), QSqrt2());
  }

  /// Sets c^k_{ij} = value and c^k_{ji} = -value.
  void set_bracket(int i, int j, int k, const QSqrt2& value) {
    check_index(i);
    check_index(j);
    check_index(k);
    if (i == j) {
      if (!value.is_zero()) throw std::invalid_argument("bracket [u_i, u_i] must vanish");
      return;
    }
    at(k, i, j) = value;
    at(k, j, i) = -value;
  }

  /// Raw entry assignment without the antisymmetric partner (used to build
  /// deliberately inconsistent data).
  void set_raw(int i, int j, int k, const QSqrt2& value) { at(k, i, j) = value; }

  const std::string& name() const { return name_; }
  int p() const { return p_; }
  int q() const { return q_; }
  int n() const { return p_ + q_; }
  bool is_leaf(int i) const { return i < p_; }
  /// Frame index of the horizontal vector f_a (0-based a).
  int h(int a) const { return p_ + a; }

  /// c^k_{ij}
  const QSqrt2& c(int k, int i, int j) const { return c_[index(k, i, j)]; }

  bool is_abelian() const {
    for (const auto& x : c_)
      if (!x.is_zero()) return false;
    return true;
  }

  /// "e1".."ep", "f1".."fq".
  std::string label(int i) const {
    return is_leaf(i) ? "e" + std::to_string(i + 1) : "f" + std::to_string(i - p_ + 1);
  }

  /// Nonzero brackets as (i, j, k, value) with i < j.
  std::vector<std::tuple<int, int, int, QSqrt2>> brackets() const {
    std::vector<std::tuple<int, int, int, QSqrt2>> out;
    for (int i = 0; i < n(); ++i)
      for (int j = i + 1; j < n(); ++j)
        for (int k = 0; k < n(); ++k)
          if (!c(k, i, j).is_zero()) out.emplace_back(i, j, k, c(k, i, j));
    return out;
  }

 private:
  std::size_t index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * n() + i) * n() + j;
  }
  QSqrt2& at(int k, int i, int j) { return c_[index(k, i, j)]; }
  void check_index(int i) const {
    if (i < 0 || i >= n()) throw std::out_of_range("frame index out of range");
  }

  std::string name_;
  int p_ = 0, q_ = 0;
  std::vector<QSqrt2> c_;
};

struct ValidationReport {
  bool ok = true;
  std::string violation;              // first violated condition, empty when ok
  std::vector<std::string> warnings;  // e.g. non-unimodular frame
};

/// Checks even codimension, antisymmetry, Jacobi, involutivity of the leaf
/// distribution and the bundle-like condition c^b_{ia} + c^a_{ib} = 0; warns
/// when sum_j c^j_{ji} != 0 (no compact quotient).
inline ValidationReport validate(const FrameModel& m) {
  ValidationReport r;
  auto fail = [&r](std::string msg) {
    if (r.ok) {
      r.ok = false;
      r.violation = std::move(msg);
    }
  };
  const int n = m.n();
  if (m.q() % 2 != 0 || m.q() == 0) fail("codimension must be even and positive (q = " + std::to_string(m.q()) + ")");
  for (int i = 0; i < n && r.ok; ++i)
    for (int j = 0; j < n && r.ok; ++j)
      for (int k = 0; k < n && r.ok; ++k)
        if (!(m.c(k, i, j) == -m.c(k, j, i)))
          fail("antisymmetry: c^" + m.label(k) + "_{" + m.label(i) + m.label(j) + "} != -c^" + m.label(k) + "_{" +
               m.label(j) + m.label(i) + "}");
  for (int i = 0; i < n && r.ok; ++i)
    for (int j = i + 1; j < n && r.ok; ++j)
      for (int k = j + 1; k < n && r.ok; ++k)
        for (int l = 0; l < n && r.ok; ++l) {
          QSqrt2 s;
          for (int t = 0; t < n; ++t) {
            s += m.c(t, i, j) * m.c(l, t, k);
            s += m.c(t, j, k) * m.c(l, t, i);
            s += m.c(t, k, i) * m.c(l, t, j);
          }
          if (!s.is_zero())
            fail("Jacobi identity fails for (" + m.label(i) + ", " + m.label(j) + ", " + m.label(k) + ") in component " +
                 m.label(l));
        }
  for (int i = 0; i < m.p() && r.ok; ++i)
    for (int j = 0; j < m.p() && r.ok; ++j)
      for (int a = 0; a < m.q() && r.ok; ++a)
        if (!m.c(m.h(a), i, j).is_zero())
          fail("involutivity: [" + m.label(i) + ", " + m.label(j) + "] has horizontal component " + m.label(m.h(a)));
  for (int i = 0; i < m.p() && r.ok; ++i)
    for (int a = 0; a < m.q() && r.ok; ++a)
      for (int b = a; b < m.q() && r.ok; ++b) {
        const QSqrt2 s = m.c(m.h(b), i, m.h(a)) + m.c(m.h(a), i, m.h(b));
        if (!s.is_zero())
          fail("bundle-like condition fails: c^" + m.label(m.h(b)) + "_{" + m.label(i) + m.label(m.h(a)) + "} + c^" +
               m.label(m.h(a)) + "_{" + m.label(i) + m.label(m.h(b)) + "} = " + s.to_string() + " != 0");
      }
  for (int i = 0; i < n; ++i) {
    QSqrt2 s;
    for (int j = 0; j < n; ++j) s += m.c(j, j, i);
    if (!s.is_zero())
      r.warnings.push_back("frame is not unimodular along " + m.label(i) + " (trace of ad = " + s.to_string() +
                           "); no compact quotient");
  }
  return r;
}

inline void require_valid(const FrameModel& m) {
  const auto r = validate(m);
  if (!r.ok) throw std::invalid_argument("invalid model '" + m.name() + "': " + r.violation);
}

/// All derived geometry of a validated model.
struct ConnectionData {
  int p = 0, q = 0;
  /// lc[(i*n + j)*n + k] = <nabla^L_{u_i} u_j, u_k>
  std::vector<QSqrt2> levi_civita;
  /// transverse[u](g, b): coefficient of f_g in nabla_{u} f_b.
  std::vector<RealMatrix> transverse;
  /// Horizontal components of the mean curvature.
  std::vector<QSqrt2> tau;
  /// integrability[a*q + b][i]: e_i component of R(f_a, f_b) = -P_F [f_a, f_b].
  std::vector<std::vector<QSqrt2>> integrability;
  /// curvature[u*n + v]: R(u, v) as a q x q matrix on the horizontal frame.
  std::vector<RealMatrix> curvature;
  /// sum_{a,b} g(R(f_a, f_b) f_a, f_b)
  QSqrt2 K;
  /// Riemannian divergence of each frame field.
  std::vector<QSqrt2> div;

  int n() const { return p + q; }
  const QSqrt2& lc(int i, int j, int k) const { return levi_civita[(static_cast<std::size_t>(i) * n() + j) * n() + k]; }
  const RealMatrix& W(int u) const { return transverse[u]; }
  const RealMatrix& R(int u, int v) const { return curvature[static_cast<std::size_t>(u) * n() + v]; }
  const std::vector<QSqrt2>& integ(int a, int b) const { return integrability[static_cast<std::size_t>(a) * q + b]; }

  /// Transverse scalar curvature in the normalization entering the
  /// Lichnerowicz formula: (1/2) sum c(f_a) c(f_b) c(R(f_a, f_b)) = scal / 4.
  QSqrt2 scal() const { return -K; }

  /// Horizontal components of nabla_{u} tau.
  std::vector<QSqrt2> nabla_tau(int u) const {
    std::vector<QSqrt2> out(q);
    for (int g = 0; g < q; ++g)
      for (int b = 0; b < q; ++b)
        if (!W(u)(g, b).is_zero() && !tau[b].is_zero()) out[g] += W(u)(g, b) * tau[b];
    return out;
  }

  QSqrt2 tau_norm2() const {
    QSqrt2 s;
    for (const auto& t : tau) s += t * t;
    return s;
  }
};

namespace detail {

inline RealMatrix curvature_of(const std::vector<RealMatrix>& w, const FrameModel& m, int u, int v) {
  RealMatrix r = w[u] * w[v] - w[v] * w[u];
  for (int k = 0; k < m.n(); ++k)
    if (!m.c(k, u, v).is_zero()) r -= w[k] * m.c(k, u, v);
  return r;
}

}  // namespace detail

/// Derives every quantity without validating (for mutation experiments);
/// prefer derive().
inline ConnectionData derive_unchecked(const FrameModel& m) {
  ConnectionData d;
  d.p = m.p();
  d.q = m.q();
  const int n = m.n(), p = m.p(), q = m.q();
  const QSqrt2 half(Rational(1, 2));

  d.levi_civita.resize(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        d.levi_civita[(static_cast<std::size_t>(i) * n + j) * n + k] = half * (m.c(k, i, j) - m.c(i, j, k) + m.c(j, k, i));

  d.transverse.assign(n, RealMatrix(q, q));
  for (int u = 0; u < n; ++u)
    for (int g = 0; g < q; ++g)
      for (int b = 0; b < q; ++b)
        d.transverse[u](g, b) = m.is_leaf(u) ? m.c(m.h(g), u, m.h(b)) : d.lc(u, m.h(b), m.h(g));

  d.tau.assign(q, QSqrt2());
  for (int g = 0; g < q; ++g)
    for (int i = 0; i < p; ++i) d.tau[g] += d.lc(i, i, m.h(g));

  d.integrability.assign(static_cast<std::size_t>(q) * q, std::vector<QSqrt2>(p));
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      for (int i = 0; i < p; ++i) d.integrability[static_cast<std::size_t>(a) * q + b][i] = -m.c(i, m.h(a), m.h(b));

  d.curvature.assign(static_cast<std::size_t>(n) * n, RealMatrix(q, q));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) d.curvature[static_cast<std::size_t>(u) * n + v] = detail::curvature_of(d.transverse, m, u, v);

  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) d.K += d.R(m.h(a), m.h(b))(b, a);

  d.div.assign(n, QSqrt2());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) d.div[i] += d.lc(k, i, k);
  return d;
}

inline ConnectionData derive(const FrameModel& m) {
  require_valid(m);
  return derive_unchecked(m);
}

// Per-quantity accessors.

inline std::vector<QSqrt2> levi_civita(const FrameModel& m) { return derive(m).levi_civita; }
inline std::vector<RealMatrix> transverse_connection(const FrameModel& m) { return derive(m).transverse; }
inline std::vector<QSqrt2> mean_curvature(const FrameModel& m) { return derive(m).tau; }
inline std::vector<std::vector<QSqrt2>> integrability_tensor(const FrameModel& m) { return derive(m).integrability; }
inline std::vector<RealMatrix> curvature(const FrameModel& m) { return derive(m).curvature; }
inline QSqrt2 scalar_curvature(const FrameModel& m) { return derive(m).K; }
inline QSqrt2 divergence(const FrameModel& m, int i) {
  const auto d = derive(m);
  if (i < 0 || i >= m.n()) throw std::out_of_range("frame index out of range");
  return d.div[i];
}

/// -g(tau + sum_b nabla_{f_b} f_b, f_a): closed form of div f_a.
inline QSqrt2 horizontal_divergence_formula(const ConnectionData& d, int a) {
  QSqrt2 s = d.tau[a];
  for (int b = 0; b < d.q; ++b) s += d.W(d.p + b)(a, b);
  return -s;
}

/// Max over (a, b) of the full-frame residual of
/// nabla_{f_a} f_b - nabla_{f_b} f_a - [f_a, f_b] - R(f_a, f_b).
inline QSqrt2 integrability_residual(const FrameModel& m, const ConnectionData& d) {
  QSqrt2 worst;
  for (int a = 0; a < m.q(); ++a)
    for (int b = 0; b < m.q(); ++b) {
      std::vector<QSqrt2> v(m.n());
      for (int g = 0; g < m.q(); ++g) v[m.h(g)] = d.W(m.h(a))(g, b) - d.W(m.h(b))(g, a);
      for (int k = 0; k < m.n(); ++k) v[k] -= m.c(k, m.h(a), m.h(b));
      for (int i = 0; i < m.p(); ++i) v[i] -= d.integ(a, b)[i];
      for (const auto& x : v)
        if (worst < abs(x)) worst = abs(x);
    }
  return worst;
}

/// d tau(u_i, u_j) = -tau([u_i, u_j]) for an invariant 1-form; zero on all
/// pairs together with tau(e_i) = 0 means tau is basic.
inline bool tau_is_basic(const FrameModel& m, const ConnectionData& d, std::string* reason = nullptr) {
  for (int i = 0; i < m.n(); ++i)
    for (int j = i + 1; j < m.n(); ++j) {
      QSqrt2 s;
      for (int g = 0; g < m.q(); ++g) s -= d.tau[g] * m.c(m.h(g), i, j);
      if (!s.is_zero()) {
        if (reason) *reason = "d tau(" + m.label(i) + ", " + m.label(j) + ") = " + s.to_string() + " != 0";
        return false;
      }
    }
  return true;
}

/// Commutator [W_u, J] must vanish for every direction; returns the first
/// offending direction.
inline std::optional<int> complex_structure_defect(const ConnectionData& d, const ComplexStructure& j) {
  for (int u = 0; u < d.n(); ++u)
    if (!commutator(d.W(u), j.matrix()).is_zero()) return u;
  return std::nullopt;
}

/// Gamma_u = 1/4 sum_{b,g} W_u(g, b) c(f_b) c(f_g) on Lambda^{0,*}, one per frame direction.
inline std::vector<FiberEndo> spin_connection(const FrameModel& m, const ConnectionData& d, const ComplexStructure& j) {
  if (j.q() != m.q()) throw std::invalid_argument("complex structure rank does not match codimension");
  if (auto u = complex_structure_defect(d, j))
    throw std::invalid_argument("transverse connection does not preserve J along " + m.label(*u));
  const auto c = spinor_generators(j);
  const std::size_t dim = c.front().rows();
  const QSqrt2 quarter(Rational(1, 4));
  std::vector<FiberEndo> out;
  for (int u = 0; u < m.n(); ++u) {
    FiberEndo g(dim, dim);
    for (int b = 0; b < m.q(); ++b)
      for (int gg = 0; gg < m.q(); ++gg)
        if (!d.W(u)(gg, b).is_zero()) g += (c[b] * c[gg]) * Scalar(quarter * d.W(u)(gg, b));
    out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<FiberEndo> spin_connection(const FrameModel& m, const ComplexStructure& j) {
  return spin_connection(m, derive(m), j);
}

/// max over directions u and frame vectors f_d of |[Gamma_u, c(f_d)] - c(nabla_u f_d)|.
inline QSqrt2 clifford_connection_residual(const ConnectionData& d, const std::vector<FiberEndo>& gamma,
                                           const std::vector<FiberEndo>& cliff) {
  QSqrt2 worst;
  for (int u = 0; u < d.n(); ++u)
    for (int dd = 0; dd < d.q; ++dd) {
      FiberEndo r = commutator(gamma[u], cliff[dd]);
      for (int g = 0; g < d.q; ++g)
        if (!d.W(u)(g, dd).is_zero()) r -= cliff[g] * Scalar(d.W(u)(g, dd));
      const QSqrt2 v = max_magnitude(r);
      if (worst < v) worst = v;
    }
  return worst;
}

}  // namespace tdirac
