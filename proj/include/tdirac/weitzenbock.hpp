#pragma once

// Normal-ordered calculus of invariant differential operators on a
// homogeneous foliated model, and the exact identity suite built on it.
//
// An operator is a finite sum A_M nabla_{m1} ... nabla_{mk} over nondecreasing
// index words M with constant fiber endomorphisms A_M. Products are brought
// to normal form with
//   nabla_u A          = A nabla_u + [Gamma_u, A]
//   nabla_u nabla_v    = nabla_v nabla_u + sum_k c^k_{uv} nabla_k + F(u, v)
// where F(u, v) = [Gamma_u, Gamma_v] - sum_k c^k_{uv} Gamma_k + k B(u, v).

#include "tdirac/clifford_fiber.hpp"
#include "tdirac/frame_geometry.hpp"
#include "tdirac/model_io.hpp"

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdirac {

enum class FiberKind {
  Spinor,  // Lambda^{0,*} tensor C^twist tensor L^k
  Forms,   // Lambda T^H M^*
  Plain,   // C^twist tensor L^k, no Clifford action
};

/// Fiber, Clifford action and connection over a model. Immutable once built.
struct FiberBundleSetup {
  FrameModel model;
  ConnectionData geometry;
  FiberKind kind = FiberKind::Spinor;
  int twist = 1;
  int k = 0;
  std::optional<ComplexStructure> J;
  std::optional<ComplexMatrix> B;  // R^L(f_a, f_b), formal units
  std::size_t dim = 0;
  std::vector<FiberEndo> cliff;       // c(f_a)
  std::vector<FiberEndo> eps, iota;   // exterior / interior products (forms)
  std::vector<FiberEndo> gamma;       // connection matrix per frame direction
  std::vector<FiberEndo> F;           // curvature per direction pair

  int n() const { return model.n(); }
  int p() const { return model.p(); }
  int q() const { return model.q(); }
  FiberEndo identity() const { return ComplexMatrix::identity(dim); }
  const FiberEndo& curvature(int u, int v) const { return F[static_cast<std::size_t>(u) * n() + v]; }

  /// k B(u, v) for horizontal u, v; zero when either is a leaf direction.
  Scalar line_curvature(int u, int v) const {
    if (!B || k == 0 || model.is_leaf(u) || model.is_leaf(v)) return Scalar();
    return (*B)(u - p(), v - p()) * Scalar(k);
  }

  std::string fiber_name() const {
    switch (kind) {
      case FiberKind::Spinor: return "spinor";
      case FiberKind::Forms: return "forms";
      case FiberKind::Plain: return "plain";
    }
    return "";
  }
};

using SetupPtr = std::shared_ptr<const FiberBundleSetup>;

namespace detail {

inline void finish_setup(FiberBundleSetup& s) {
  const int n = s.n();
  if (s.B) {
    if (s.B->rows() != static_cast<std::size_t>(s.q())) throw std::invalid_argument("line bundle curvature has wrong size");
    TwoForm check(*s.B);
    // Closedness of the invariant 2-form: sum over cyclic (u, v, w) of B([u, v], w) = 0.
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        for (int w = v + 1; w < n; ++w) {
          Scalar sum;
          const int t[3][3] = {{u, v, w}, {v, w, u}, {w, u, v}};
          for (const auto& x : t)
            for (int kk = 0; kk < n; ++kk) {
              const QSqrt2& c = s.model.c(kk, x[0], x[1]);
              if (c.is_zero() || s.model.is_leaf(kk) || s.model.is_leaf(x[2])) continue;
              sum += (*s.B)(kk - s.p(), x[2] - s.p()) * Scalar(c);
            }
          if (!sum.is_zero())
            throw std::invalid_argument("line bundle curvature is not closed on (" + s.model.label(u) + ", " +
                                        s.model.label(v) + ", " + s.model.label(w) + ")");
        }
  }
  s.F.assign(static_cast<std::size_t>(n) * n, FiberEndo(s.dim, s.dim));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      FiberEndo f = commutator(s.gamma[u], s.gamma[v]);
      for (int kk = 0; kk < n; ++kk)
        if (!s.model.c(kk, u, v).is_zero()) f -= s.gamma[kk] * Scalar(s.model.c(kk, u, v));
      const Scalar lc = s.line_curvature(u, v);
      if (!lc.is_zero()) f += s.identity() * lc;
      s.F[static_cast<std::size_t>(u) * n + v] = std::move(f);
    }
  for (int a = 0; a < s.p(); ++a)
    for (int b = 0; b < s.p(); ++b)
      if (!s.curvature(a, b).is_zero())
        throw std::invalid_argument("connection is not leafwise flat along (" + s.model.label(a) + ", " +
                                    s.model.label(b) + ")");
}

}  // namespace detail

/// Lambda^{0,*} tensor C^twist tensor L^k with the spin connection lifted
/// through J and the formal line-bundle curvature k B.
inline SetupPtr make_spinor_setup(const FrameModel& model, const ComplexStructure& j, int twist = 1, int k = 0,
                                  std::optional<ComplexMatrix> b = std::nullopt) {
  if (twist < 1) throw std::invalid_argument("twist dimension must be positive");
  auto s = std::make_shared<FiberBundleSetup>();
  s->model = model;
  s->geometry = derive(model);
  s->kind = FiberKind::Spinor;
  s->twist = twist;
  s->k = k;
  s->J = j;
  s->B = std::move(b);
  s->cliff = spinor_generators(j, twist);
  s->dim = s->cliff.front().rows();
  const auto spin = spin_connection(model, s->geometry, j);
  for (const auto& g : spin) s->gamma.push_back(twist == 1 ? g : kron(g, ComplexMatrix::identity(twist)));
  detail::finish_setup(*s);
  return s;
}

/// Lambda T^H M^* with c(f) = eps - iota and the derivation extension of the
/// transverse connection.
inline SetupPtr make_form_setup(const FrameModel& model) {
  auto s = std::make_shared<FiberBundleSetup>();
  s->model = model;
  s->geometry = derive(model);
  s->kind = FiberKind::Forms;
  const int q = model.q();
  s->dim = std::size_t(1) << q;
  for (int a = 0; a < q; ++a) {
    s->eps.push_back(exterior_matrix(q, a));
    s->iota.push_back(interior_matrix(q, a));
    s->cliff.push_back(s->eps.back() - s->iota.back());
  }
  for (int u = 0; u < model.n(); ++u) {
    FiberEndo g(s->dim, s->dim);
    for (int gg = 0; gg < q; ++gg)
      for (int b = 0; b < q; ++b)
        if (!s->geometry.W(u)(gg, b).is_zero()) g += (s->eps[gg] * s->iota[b]) * Scalar(s->geometry.W(u)(gg, b));
    s->gamma.push_back(std::move(g));
  }
  detail::finish_setup(*s);
  return s;
}

/// C^rank tensor L^k with trivial connection on the first factor.
inline SetupPtr make_plain_setup(const FrameModel& model, int rank, int k, std::optional<ComplexMatrix> b) {
  if (rank < 1) throw std::invalid_argument("fiber rank must be positive");
  auto s = std::make_shared<FiberBundleSetup>();
  s->model = model;
  s->geometry = derive(model);
  s->kind = FiberKind::Plain;
  s->twist = rank;
  s->k = k;
  s->B = std::move(b);
  s->dim = static_cast<std::size_t>(rank);
  s->gamma.assign(model.n(), FiberEndo(s->dim, s->dim));
  detail::finish_setup(*s);
  return s;
}

// ---------------------------------------------------------------------------
// DiffOp

using Monomial = std::vector<int>;

class DiffOp {
 public:
  explicit DiffOp(SetupPtr setup) : setup_(std::move(setup)) {
    if (!setup_) throw std::invalid_argument("operator needs a bundle setup");
  }

  static DiffOp zero(SetupPtr s) { return DiffOp(std::move(s)); }
  static DiffOp endo(SetupPtr s, FiberEndo a) {
    DiffOp d(std::move(s));
    d.add_term({}, std::move(a));
    return d;
  }
  static DiffOp identity(SetupPtr s) {
    auto id = s->identity();
    return endo(std::move(s), std::move(id));
  }
  static DiffOp nabla(SetupPtr s, int u) {
    if (u < 0 || u >= s->n()) throw std::out_of_range("frame index out of range");
    auto id = s->identity();
    DiffOp d(std::move(s));
    d.add_term({u}, std::move(id));
    return d;
  }
  /// nabla_X for X = sum_k x_k u_k.
  static DiffOp nabla_along(SetupPtr s, const std::vector<QSqrt2>& x) {
    if (static_cast<int>(x.size()) != s->n()) throw std::invalid_argument("vector size mismatch");
    DiffOp d(s);
    for (int k = 0; k < s->n(); ++k)
      if (!x[k].is_zero()) d.add_term({k}, s->identity() * Scalar(x[k]));
    return d;
  }

  const SetupPtr& setup() const { return setup_; }
  const std::map<Monomial, FiberEndo>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [m, a] : terms_) d = std::max(d, static_cast<int>(m.size()));
    return d;
  }

  FiberEndo coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? FiberEndo(setup_->dim, setup_->dim) : it->second;
  }

  /// Adds A nabla_M; M must be nondecreasing.
  void add_term(const Monomial& m, const FiberEndo& a) {
    for (std::size_t i = 1; i < m.size(); ++i)
      if (m[i] < m[i - 1]) throw std::invalid_argument("monomial is not in normal order");
    for (int i : m)
      if (i < 0 || i >= setup_->n()) throw std::out_of_range("frame index out of range");
    if (a.rows() != setup_->dim || a.cols() != setup_->dim) throw std::invalid_argument("coefficient has wrong fiber dimension");
    if (a.is_zero()) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      terms_.emplace(m, a);
    } else {
      it->second += a;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  DiffOp& operator+=(const DiffOp& o) {
    check_setup(o);
    for (const auto& [m, a] : o.terms_) add_term(m, a);
    return *this;
  }
  DiffOp& operator-=(const DiffOp& o) {
    check_setup(o);
    for (const auto& [m, a] : o.terms_) add_term(m, -a);
    return *this;
  }
  DiffOp& operator*=(const Scalar& s) {
    if (s.is_zero()) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, a] : terms_) a *= s;
    return *this;
  }
  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }
  friend DiffOp operator*(const Scalar& s, DiffOp a) { return a *= s; }
  DiffOp operator-() const { return Scalar(-1) * *this; }

  /// A P (left multiplication by a constant endomorphism).
  friend DiffOp operator*(const FiberEndo& a, const DiffOp& p) {
    DiffOp out(p.setup_);
    for (const auto& [m, c] : p.terms_) out.add_term(m, a * c);
    return out;
  }

  void check_setup(const DiffOp& o) const {
    if (o.setup_ != setup_) throw std::invalid_argument("operators belong to different bundle setups");
  }

  std::string monomial_name(const Monomial& m) const {
    if (m.empty()) return "1";
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i) s += (i ? " " : "") + std::string("∇_") + setup_->model.label(m[i]);
    return s;
  }

 private:
  SetupPtr setup_;
  std::map<Monomial, FiberEndo> terms_;
};

namespace detail {

DiffOp apply_nabla(int u, const DiffOp& x);

/// Normal form of nabla_u nabla_M for a normal-ordered word M.
inline DiffOp nabla_word(const SetupPtr& s, int u, const Monomial& m) {
  DiffOp out(s);
  if (m.empty() || u <= m.front()) {
    Monomial w;
    w.reserve(m.size() + 1);
    w.push_back(u);
    w.insert(w.end(), m.begin(), m.end());
    out.add_term(w, s->identity());
    return out;
  }
  const int m1 = m.front();
  const Monomial rest(m.begin() + 1, m.end());
  // nabla_u nabla_{m1} = nabla_{m1} nabla_u + sum_k c^k_{u m1} nabla_k + F(u, m1)
  out += apply_nabla(m1, nabla_word(s, u, rest));
  for (int k = 0; k < s->n(); ++k) {
    const QSqrt2& c = s->model.c(k, u, m1);
    if (c.is_zero()) continue;
    out += Scalar(c) * nabla_word(s, k, rest);
  }
  const FiberEndo& f = s->curvature(u, m1);
  if (!f.is_zero()) {
    DiffOp tail(s);
    tail.add_term(rest, f);
    out += tail;
  }
  return out;
}

/// Normal form of nabla_u X.
inline DiffOp apply_nabla(int u, const DiffOp& x) {
  const SetupPtr& s = x.setup();
  DiffOp out(s);
  for (const auto& [m, a] : x.terms()) {
    out += a * nabla_word(s, u, m);
    const FiberEndo comm = commutator(s->gamma[u], a);
    if (!comm.is_zero()) {
      DiffOp t(s);
      t.add_term(m, comm);
      out += t;
    }
  }
  return out;
}

}  // namespace detail

/// Normal-ordered product P Q.
inline DiffOp compose(const DiffOp& p, const DiffOp& q) {
  p.check_setup(q);
  DiffOp out(p.setup());
  for (const auto& [m, a] : p.terms()) {
    DiffOp x = q;
    for (auto it = m.rbegin(); it != m.rend(); ++it) x = detail::apply_nabla(*it, x);
    out += a * x;
  }
  return out;
}

/// Formal L^2 adjoint for the invariant volume: (nabla_u)^* = -nabla_u - div u,
/// (A nabla_{m1} nabla_{m2})^* = nabla_{m2}^* nabla_{m1}^* A^*.
inline DiffOp adjoint(const DiffOp& p) {
  if (p.degree() > 2) throw std::invalid_argument("adjoint is supported for degree <= 2 only");
  const SetupPtr& s = p.setup();
  DiffOp out(s);
  for (const auto& [m, a] : p.terms()) {
    DiffOp x = DiffOp::endo(s, tdirac::adjoint(a));
    for (int u : m) {
      DiffOp star = -DiffOp::nabla(s, u);
      const QSqrt2& div = s->geometry.div[u];
      if (!div.is_zero()) star -= DiffOp::endo(s, s->identity() * Scalar(div));
      x = compose(star, x);
    }
    out += x;
  }
  return out;
}

/// Evaluates P on an invariant section s (nabla_u s = Gamma_u s).
inline std::vector<Scalar> apply_to_invariant(const DiffOp& p, const std::vector<Scalar>& s) {
  const auto& setup = *p.setup();
  if (s.size() != setup.dim) throw std::invalid_argument("section has wrong fiber dimension");
  std::vector<Scalar> out(setup.dim);
  for (const auto& [m, a] : p.terms()) {
    std::vector<Scalar> v = s;
    for (auto it = m.rbegin(); it != m.rend(); ++it) v = setup.gamma[*it] * v;
    v = a * v;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fiber endomorphisms assembled from geometric data

/// c(v) for a horizontal vector v.
inline FiberEndo clifford_of(const FiberBundleSetup& s, const std::vector<QSqrt2>& v) {
  if (s.cliff.empty()) throw std::invalid_argument("fiber carries no Clifford action");
  FiberEndo out(s.dim, s.dim);
  for (int a = 0; a < s.q(); ++a)
    if (!v[a].is_zero()) out += s.cliff[a] * Scalar(v[a]);
  return out;
}

/// c(R) = 1/4 sum_{a,b} g(R f_a, f_b) c(f_a) c(f_b) for a q x q matrix R.
inline FiberEndo clifford_of_curvature(const FiberBundleSetup& s, const RealMatrix& r) {
  FiberEndo out(s.dim, s.dim);
  const QSqrt2 quarter(Rational(1, 4));
  for (int a = 0; a < s.q(); ++a)
    for (int b = 0; b < s.q(); ++b)
      if (!r(b, a).is_zero()) out += (s.cliff[a] * s.cliff[b]) * Scalar(quarter * r(b, a));
  return out;
}

/// Derivation extension sum_{g,b} R(g, b) eps_g iota_b on forms.
inline FiberEndo derivation_of(const FiberBundleSetup& s, const RealMatrix& r) {
  if (s.kind != FiberKind::Forms) throw std::invalid_argument("derivation extension needs the form fiber");
  FiberEndo out(s.dim, s.dim);
  for (int g = 0; g < s.q(); ++g)
    for (int b = 0; b < s.q(); ++b)
      if (!r(g, b).is_zero()) out += (s.eps[g] * s.iota[b]) * Scalar(r(g, b));
  return out;
}

/// Contraction-type endomorphism sum_g v_g X[g] for one of the generator lists.
inline FiberEndo combine(const FiberBundleSetup& s, const std::vector<FiberEndo>& gens, const std::vector<QSqrt2>& v) {
  FiberEndo out(s.dim, s.dim);
  for (int g = 0; g < s.q(); ++g)
    if (!v[g].is_zero()) out += gens[g] * Scalar(v[g]);
  return out;
}

/// Twisting curvature R^{E/S}(f_a, f_b).
inline FiberEndo twisting_curvature(const FiberBundleSetup& s, const ConnectionData& d, int a, int b) {
  const int u = s.p() + a, v = s.p() + b;
  switch (s.kind) {
    case FiberKind::Spinor: return s.identity() * s.line_curvature(u, v);
    case FiberKind::Forms: return derivation_of(s, d.R(u, v)) - clifford_of_curvature(s, d.R(u, v));
    case FiberKind::Plain: return s.identity() * s.line_curvature(u, v);
  }
  return {};
}

/// Full curvature R^E(f_a, f_b) assembled from geometric data.
inline FiberEndo bundle_curvature(const FiberBundleSetup& s, const ConnectionData& d, int a, int b) {
  const int u = s.p() + a, v = s.p() + b;
  switch (s.kind) {
    case FiberKind::Spinor: return clifford_of_curvature(s, d.R(u, v)) + twisting_curvature(s, d, a, b);
    case FiberKind::Forms: return derivation_of(s, d.R(u, v));
    case FiberKind::Plain: return twisting_curvature(s, d, a, b);
  }
  return {};
}

inline std::vector<QSqrt2> leaf_vector(const FiberBundleSetup& s, const std::vector<QSqrt2>& leaf) {
  std::vector<QSqrt2> x(s.n());
  for (int i = 0; i < s.p(); ++i) x[i] = leaf[i];
  return x;
}

inline std::vector<QSqrt2> horizontal_vector(const FiberBundleSetup& s, const std::vector<QSqrt2>& h) {
  std::vector<QSqrt2> x(s.n());
  for (int a = 0; a < s.q(); ++a) x[s.p() + a] = h[a];
  return x;
}

// ---------------------------------------------------------------------------
// Operator builders

/// D' = sum_a c(f_a) nabla_{f_a}
inline DiffOp build_dirac_prime(const SetupPtr& s) {
  if (s->cliff.empty()) throw std::invalid_argument("Dirac operator needs a Clifford module");
  DiffOp d(s);
  for (int a = 0; a < s->q(); ++a) d.add_term({s->p() + a}, s->cliff[a]);
  return d;
}

/// D = D' - 1/2 c(tau)
inline DiffOp build_dirac(const SetupPtr& s, const ConnectionData& data) {
  return build_dirac_prime(s) - DiffOp::endo(s, clifford_of(*s, data.tau) * Scalar(QSqrt2(Rational(1, 2))));
}
inline DiffOp build_dirac(const SetupPtr& s) { return build_dirac(s, s->geometry); }

/// sum_a (nabla_{f_a})^* nabla_{f_a} through the adjoint engine.
inline DiffOp build_bochner(const SetupPtr& s) {
  DiffOp out(s);
  for (int a = 0; a < s->q(); ++a) {
    const DiffOp na = DiffOp::nabla(s, s->p() + a);
    out += compose(adjoint(na), na);
  }
  return out;
}

/// -sum_a nabla_{f_a}^2 - sum_a div(f_a) nabla_{f_a}, from the given data.
inline DiffOp bochner_from_data(const SetupPtr& s, const ConnectionData& data) {
  DiffOp out(s);
  for (int a = 0; a < s->q(); ++a) {
    const int u = s->p() + a;
    out.add_term({u, u}, -s->identity());
    if (!data.div[u].is_zero()) out.add_term({u}, s->identity() * Scalar(-data.div[u]));
  }
  return out;
}

/// -sum_a nabla_{f_a}^2 + nabla_tau + nabla_{sum_b nabla_{f_b} f_b}
inline DiffOp bochner_expanded(const SetupPtr& s, const ConnectionData& data) {
  DiffOp out(s);
  for (int a = 0; a < s->q(); ++a) out.add_term({s->p() + a, s->p() + a}, -s->identity());
  std::vector<QSqrt2> x = data.tau;
  for (int b = 0; b < s->q(); ++b)
    for (int g = 0; g < s->q(); ++g) x[g] += data.W(s->p() + b)(g, b);
  return out + DiffOp::nabla_along(s, horizontal_vector(*s, x));
}

/// 1/2 sum_{a,b} X_a Y_b nabla_{R(f_a, f_b)} for generator lists X, Y.
inline DiffOp integrability_term(const SetupPtr& s, const ConnectionData& data, const std::vector<FiberEndo>& x,
                                 const std::vector<FiberEndo>& y) {
  DiffOp out(s);
  const QSqrt2 half(Rational(1, 2));
  for (int a = 0; a < s->q(); ++a)
    for (int b = 0; b < s->q(); ++b) {
      const auto& r = data.integ(a, b);
      const FiberEndo xy = x[a] * y[b];
      for (int i = 0; i < s->p(); ++i)
        if (!r[i].is_zero()) out.add_term({i}, xy * Scalar(half * r[i]));
    }
  return out;
}

/// sum_a c(f_a) c(nabla_{f_a} tau)
inline FiberEndo tau_derivative_term(const FiberBundleSetup& s, const ConnectionData& data) {
  FiberEndo out(s.dim, s.dim);
  for (int a = 0; a < s.q(); ++a) out += s.cliff[a] * clifford_of(s, data.nabla_tau(s.p() + a));
  return out;
}

/// 1/2 sum_{a,b} c(f_a) c(f_b) X(a, b)
template <class Fn>
FiberEndo clifford_contraction(const FiberBundleSetup& s, Fn&& x) {
  FiberEndo out(s.dim, s.dim);
  const Scalar half(QSqrt2(Rational(1, 2)));
  for (int a = 0; a < s.q(); ++a)
    for (int b = 0; b < s.q(); ++b) {
      const FiberEndo xab = x(a, b);
      if (!xab.is_zero()) out += (s.cliff[a] * s.cliff[b] * xab) * half;
    }
  return out;
}

/// Lichnerowicz right-hand side:
/// Bochner - 1/2 sum c(f_a) c(nabla_a tau) - |tau|^2/4 + scal/4
///   + 1/2 sum c(f_a) c(f_b) [R^{E/S}(f_a, f_b) - nabla_{R(f_a, f_b)}].
inline DiffOp build_lichnerowicz_rhs(const SetupPtr& s, const ConnectionData& data) {
  const QSqrt2 half(Rational(1, 2)), quarter(Rational(1, 4));
  DiffOp out = bochner_from_data(s, data);
  FiberEndo zero_order = tau_derivative_term(*s, data) * Scalar(-half);
  zero_order += s->identity() * Scalar(quarter * (data.scal() - data.tau_norm2()));
  zero_order += clifford_contraction(*s, [&](int a, int b) { return twisting_curvature(*s, data, a, b); });
  out += DiffOp::endo(s, zero_order);
  out -= integrability_term(s, data, s->cliff, s->cliff);
  return out;
}
inline DiffOp build_lichnerowicz_rhs(const SetupPtr& s) { return build_lichnerowicz_rhs(s, s->geometry); }

/// Bochner - nabla_tau + 1/2 sum c c [R^E - nabla_R]
inline DiffOp build_dirac_prime_square_rhs(const SetupPtr& s, const ConnectionData& data) {
  DiffOp out = bochner_from_data(s, data);
  out -= DiffOp::nabla_along(s, horizontal_vector(*s, data.tau));
  out += DiffOp::endo(s, clifford_contraction(*s, [&](int a, int b) { return bundle_curvature(*s, data, a, b); }));
  out -= integrability_term(s, data, s->cliff, s->cliff);
  return out;
}

/// Bochner - 1/2 sum c(f_a) c(nabla_a tau) - |tau|^2/4 + 1/2 sum c c [R^E - nabla_R]
inline DiffOp build_dirac_square_rhs(const SetupPtr& s, const ConnectionData& data) {
  const QSqrt2 half(Rational(1, 2)), quarter(Rational(1, 4));
  DiffOp out = bochner_from_data(s, data);
  FiberEndo zero_order = tau_derivative_term(*s, data) * Scalar(-half);
  zero_order -= s->identity() * Scalar(quarter * data.tau_norm2());
  zero_order += clifford_contraction(*s, [&](int a, int b) { return bundle_curvature(*s, data, a, b); });
  out += DiffOp::endo(s, zero_order);
  out -= integrability_term(s, data, s->cliff, s->cliff);
  return out;
}

inline void require_forms(const SetupPtr& s) {
  if (s->kind != FiberKind::Forms) throw std::invalid_argument("operator needs the form fiber");
}

/// d_H = sum_a eps_a nabla_{f_a}
inline DiffOp build_dH(const SetupPtr& s) {
  require_forms(s);
  DiffOp d(s);
  for (int a = 0; a < s->q(); ++a) d.add_term({s->p() + a}, s->eps[a]);
  return d;
}

/// d_H^* = -sum_a iota_a nabla_{f_a} + iota_tau
inline DiffOp build_dH_star(const SetupPtr& s, const ConnectionData& data) {
  require_forms(s);
  DiffOp d(s);
  for (int a = 0; a < s->q(); ++a) d.add_term({s->p() + a}, -s->iota[a]);
  d.add_term({}, combine(*s, s->iota, data.tau));
  return d;
}
inline DiffOp build_dH_star(const SetupPtr& s) { return build_dH_star(s, s->geometry); }

inline DiffOp build_signature(const SetupPtr& s) { return build_dH(s) + build_dH_star(s); }

inline DiffOp build_deltaH(const SetupPtr& s) {
  const DiffOp d = build_dH(s), ds = build_dH_star(s);
  return compose(d, ds) + compose(ds, d);
}

/// Bochner + sum_a eps_a iota_{nabla_a tau} - sum_{a,b} eps_a iota_b (R^Lambda(f_a, f_b) - nabla_{R(f_a, f_b)})
inline DiffOp build_form_bochner_rhs(const SetupPtr& s, const ConnectionData& data) {
  require_forms(s);
  DiffOp out = bochner_from_data(s, data);
  FiberEndo zero_order(s->dim, s->dim);
  for (int a = 0; a < s->q(); ++a) zero_order += s->eps[a] * combine(*s, s->iota, data.nabla_tau(s->p() + a));
  for (int a = 0; a < s->q(); ++a)
    for (int b = 0; b < s->q(); ++b) zero_order -= s->eps[a] * s->iota[b] * bundle_curvature(*s, data, a, b);
  out += DiffOp::endo(s, zero_order);
  // + sum_{a,b} eps_a iota_b nabla_R = 2 * (1/2 sum eps iota nabla_R)
  out += Scalar(2) * integrability_term(s, data, s->eps, s->iota);
  return out;
}

/// -1/2 sum eps_a eps_b nabla_{R(f_a, f_b)}
inline DiffOp build_dH_square_rhs(const SetupPtr& s, const ConnectionData& data) {
  require_forms(s);
  return -integrability_term(s, data, s->eps, s->eps);
}

/// -1/2 sum iota_a iota_b nabla_{R(f_a, f_b)} - sum_a iota_a iota_{nabla_a tau}
inline DiffOp build_dH_star_square_rhs(const SetupPtr& s, const ConnectionData& data) {
  require_forms(s);
  DiffOp out = -integrability_term(s, data, s->iota, s->iota);
  FiberEndo zero_order(s->dim, s->dim);
  for (int a = 0; a < s->q(); ++a) zero_order -= s->iota[a] * combine(*s, s->iota, data.nabla_tau(s->p() + a));
  return out + DiffOp::endo(s, zero_order);
}

/// d_H + d_H^* - 1/2 (eps_tau + iota_tau)
inline DiffOp build_signature_dirac_rhs(const SetupPtr& s, const ConnectionData& data) {
  require_forms(s);
  const FiberEndo t = combine(*s, s->eps, data.tau) + combine(*s, s->iota, data.tau);
  return build_dH(s) + build_dH_star(s, data) - DiffOp::endo(s, t * Scalar(QSqrt2(Rational(1, 2))));
}

/// d_H^* tau for the invariant 1-form tau, a constant function.
inline Scalar codifferential_of_tau(const SetupPtr& forms, const ConnectionData& data) {
  std::vector<Scalar> t(forms->dim);
  for (int a = 0; a < forms->q(); ++a) t[Mask(1) << a] = Scalar(data.tau[a]);
  const auto out = apply_to_invariant(build_dH_star(forms, data), t);
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!out[i].is_zero()) throw std::logic_error("codifferential of a 1-form has higher-degree part");
  return out[0];
}

/// Basic-tau form of the Dirac square:
/// Bochner - 1/2 d_H^* tau + |tau|^2/4 + scal/4 + 1/2 sum c c [R^{E/S} - nabla_R].
inline DiffOp build_basic_tau_rhs(const SetupPtr& s, const SetupPtr& forms, const ConnectionData& data) {
  const QSqrt2 half(Rational(1, 2)), quarter(Rational(1, 4));
  DiffOp out = bochner_from_data(s, data);
  FiberEndo zero_order = s->identity() * (codifferential_of_tau(forms, data) * Scalar(-half));
  zero_order += s->identity() * Scalar(quarter * (data.tau_norm2() + data.scal()));
  zero_order += clifford_contraction(*s, [&](int a, int b) { return twisting_curvature(*s, data, a, b); });
  out += DiffOp::endo(s, zero_order);
  out -= integrability_term(s, data, s->cliff, s->cliff);
  return out;
}

// ---------------------------------------------------------------------------
// Verification

struct MonomialResidual {
  std::string monomial;
  QSqrt2 residual;
};

struct IdentityReport {
  std::string label;
  std::string anchor;
  std::string status;  // "pass", "fail", "skipped", "reported"
  std::string note;
  bool exact_zero = false;
  QSqrt2 residual;
  std::vector<MonomialResidual> nonzero;  // localized residual per monomial

  bool passed() const { return status == "pass" || status == "skipped" || (status == "reported"); }
  double residual_decimal() const { return residual.to_double(); }
};

/// Max entry deviation per monomial between two operators; zero means the
/// identity holds exactly.
inline IdentityReport verify_identity(const DiffOp& lhs, const DiffOp& rhs) {
  lhs.check_setup(rhs);
  IdentityReport r;
  const DiffOp diff = lhs - rhs;
  for (const auto& [m, a] : diff.terms()) {
    const QSqrt2 v = max_magnitude(a);
    r.nonzero.push_back({diff.monomial_name(m), v});
    if (r.residual < v) r.residual = v;
  }
  r.exact_zero = r.nonzero.empty();
  r.status = r.exact_zero ? "pass" : "fail";
  return r;
}

/// Residual of a degree-0 identity between endomorphisms.
inline IdentityReport verify_endo_identity(const SetupPtr& s, const FiberEndo& lhs, const FiberEndo& rhs) {
  return verify_identity(DiffOp::endo(s, lhs), DiffOp::endo(s, rhs));
}

struct SuiteInput {
  FrameModel model;
  ComplexStructure J = ComplexStructure::standard_structure(2);
  std::optional<ComplexMatrix> B;
  int twist = 1;
  int k = 1;
  std::optional<Mutation> mutation;
};

inline SuiteInput suite_input(const ModelFile& f) {
  SuiteInput in;
  in.model = f.model;
  in.J = f.complex_structure();
  in.B = f.line_bundle;
  in.twist = f.twist_dim;
  in.k = f.k;
  in.mutation = f.mutation;
  return in;
}

struct SuiteReport {
  std::string model;
  std::vector<IdentityReport> items;
  std::vector<std::string> warnings;

  std::size_t passed_count() const {
    std::size_t n = 0;
    for (const auto& i : items)
      if (i.status == "pass") ++n;
    return n;
  }
  bool all_pass() const {
    for (const auto& i : items)
      if (i.status == "fail") return false;
    return true;
  }
};

/// One identity of the suite as a pair of operators on a common setup.
struct IdentityPair {
  std::string label;
  std::string anchor;
  std::optional<DiffOp> lhs, rhs;
  bool reported = false;     // checked and reported, not required
  std::string skip_reason;   // nonempty when not applicable
};

struct SuiteOperators {
  SetupPtr spinor, forms;
  ConnectionData data;  // right-hand-side data, possibly mutated
  std::vector<IdentityPair> pairs;
  std::vector<std::string> warnings;
};

/// Builds every identity: left-hand sides are composed from the model's own
/// connection; right-hand sides are assembled from the derived data, with the
/// requested mutation applied.
inline SuiteOperators suite_operators(const SuiteInput& in) {
  SuiteOperators ops;
  ops.warnings = validate(in.model).warnings;
  ops.spinor = make_spinor_setup(in.model, in.J, in.twist, in.k, in.B);
  ops.forms = make_form_setup(in.model);
  ops.data = ops.spinor->geometry;
  if (in.mutation) apply_mutation(ops.data, *in.mutation);
  const SetupPtr& spin = ops.spinor;
  const SetupPtr& forms = ops.forms;
  const ConnectionData& data = ops.data;
  const Scalar half(QSqrt2(Rational(1, 2)));

  auto add = [&ops](std::string label, std::string anchor, DiffOp lhs, DiffOp rhs, bool reported = false) {
    IdentityPair p;
    p.label = std::move(label);
    p.anchor = std::move(anchor);
    p.lhs = std::move(lhs);
    p.rhs = std::move(rhs);
    p.reported = reported;
    ops.pairs.push_back(std::move(p));
  };

  const DiffOp dirac = build_dirac(spin);
  const DiffOp dirac_sq = compose(dirac, dirac);
  const DiffOp dprime = build_dirac_prime(spin);

  add("a",
      "Lichnerowicz formula: D^2 = sum (nabla_a)^* nabla_a - 1/2 sum c(f_a)c(nabla_a tau) - |tau|^2/4 + scal/4 "
      "+ 1/2 sum c(f_a)c(f_b)[R^{E/S}(f_a,f_b) - nabla_{R(f_a,f_b)}]",
      dirac_sq, build_lichnerowicz_rhs(spin, data));
  add("b",
      "square of D': (D')^2 = sum (nabla_a)^* nabla_a - nabla_tau + 1/2 sum c(f_a)c(f_b)[R^E(f_a,f_b) - "
      "nabla_{R(f_a,f_b)}]",
      compose(dprime, dprime), build_dirac_prime_square_rhs(spin, data));
  add("c",
      "square of D with full curvature: D^2 = sum (nabla_a)^* nabla_a - 1/2 sum c(f_a)c(nabla_a tau) - |tau|^2/4 "
      "+ 1/2 sum c(f_a)c(f_b)[R^E(f_a,f_b) - nabla_{R(f_a,f_b)}]",
      dirac_sq, build_dirac_square_rhs(spin, data));
  {
    const FiberEndo lhs = clifford_contraction(*spin, [&](int a, int b) { return bundle_curvature(*spin, data, a, b); });
    FiberEndo rhs = spin->identity() * Scalar(QSqrt2(Rational(1, 4)) * data.scal());
    rhs += clifford_contraction(*spin, [&](int a, int b) { return twisting_curvature(*spin, data, a, b); });
    add("d",
        "curvature contraction: 1/2 sum c(f_a)c(f_b)R^E(f_a,f_b) = scal/4 + 1/2 sum c(f_a)c(f_b)R^{E/S}(f_a,f_b)",
        DiffOp::endo(spin, lhs), DiffOp::endo(spin, rhs));
  }
  const DiffOp dh = build_dH(forms), dhs = build_dH_star(forms);
  add("e",
      "transverse Bochner formula: Delta_H = sum (nabla_a)^* nabla_a + sum eps_a iota_{nabla_a tau} - sum "
      "eps_a iota_b (R(f_a,f_b) - nabla_{R(f_a,f_b)})",
      compose(dh, dhs) + compose(dhs, dh), build_form_bochner_rhs(forms, data));
  add("f1", "square of d_H: d_H^2 = -1/2 sum eps_a eps_b nabla_{R(f_a,f_b)}", compose(dh, dh),
      build_dH_square_rhs(forms, data));
  add("f2", "square of d_H^*: (d_H^*)^2 = -1/2 sum iota_a iota_b nabla_{R(f_a,f_b)} - sum iota_a iota_{nabla_a tau}",
      compose(dhs, dhs), build_dH_star_square_rhs(forms, data));
  add("g", "Dirac operator on forms: D = d_H + d_H^* - 1/2 (eps_tau + iota_tau)", build_dirac(forms),
      build_signature_dirac_rhs(forms, data));
  {
    FiberEndo ee(forms->dim, forms->dim), ii(forms->dim, forms->dim);
    for (int a = 0; a < forms->q(); ++a)
      for (int b = 0; b < forms->q(); ++b) {
        const FiberEndo r = bundle_curvature(*forms, data, a, b);
        ee += forms->eps[a] * forms->eps[b] * r * half;
        ii += forms->iota[a] * forms->iota[b] * r * half;
      }
    add("h1", "curvature Bianchi contraction: 1/2 sum eps_a eps_b R(f_a,f_b) = 0", DiffOp::endo(forms, ee),
        DiffOp::zero(forms), true);
    add("h2", "curvature Bianchi contraction: 1/2 sum iota_a iota_b R(f_a,f_b) = 0", DiffOp::endo(forms, ii),
        DiffOp::zero(forms), true);
  }
  {
    IdentityPair p;
    p.label = "i";
    p.anchor =
        "basic mean curvature: D^2 = sum (nabla_a)^* nabla_a - 1/2 d_H^* tau + |tau|^2/4 + scal/4 + 1/2 sum "
        "c(f_a)c(f_b)[R^{E/S}(f_a,f_b) - nabla_{R(f_a,f_b)}]";
    std::string reason;
    if (tau_is_basic(in.model, spin->geometry, &reason)) {
      p.lhs = dirac_sq;
      p.rhs = build_basic_tau_rhs(spin, forms, data);
    } else {
      p.skip_reason = "τ not basic: " + reason;
    }
    ops.pairs.push_back(std::move(p));
  }
  return ops;
}

/// Exact residual of every identity of the suite.
inline SuiteReport verify_suite(const SuiteInput& in) {
  const SuiteOperators ops = suite_operators(in);
  SuiteReport rep;
  rep.model = in.model.name();
  rep.warnings = ops.warnings;
  for (const auto& p : ops.pairs) {
    IdentityReport r;
    if (!p.skip_reason.empty()) {
      r.status = "skipped";
      r.note = p.skip_reason;
    } else {
      r = verify_identity(*p.lhs, *p.rhs);
      if (p.reported) {
        r.status = "reported";
        r.note = r.exact_zero ? "holds on this model" : "does not hold on this model";
      } else if (p.label == "i" && r.exact_zero) {
        r.note = "pass (τ basic)";
      }
    }
    r.label = p.label;
    r.anchor = p.anchor;
    rep.items.push_back(std::move(r));
  }
  return rep;
}

}  // namespace tdirac
