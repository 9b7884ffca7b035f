#pragma once

// Lattice realization of invariant operators on flat transverse tori with a
// magnetic line bundle, and spectral checks of the Landau-level structure.
//
// Formal operators live on a torus of side sqrt(s) in every direction, where
// s is the flux unit of the model (2 pi for "unit": "2pi"). Matrices are
// reported for the unit torus: every assembled matrix is multiplied by s.

#include "tdirac/weitzenbock.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <complex>
#include <future>
#include <numbers>
#include <random>

namespace tdirac {

using cdouble = std::complex<double>;
using SparseC = Eigen::SparseMatrix<cdouble>;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline cdouble to_cdouble(const Scalar& z) { return {z.re.to_double(), z.im.to_double()}; }

struct LatticeOptions {
  int N = 16;
  bool reduced = true;               // leaf-invariant sections only
  std::vector<cdouble> gauge;        // optional unit phase per site
};

/// Grid, link phases and flux bookkeeping for one bundle setup.
class Lattice {
 public:
  Lattice(SetupPtr setup, double scale, LatticeOptions opt) : setup_(std::move(setup)), scale_(scale), opt_(std::move(opt)) {
    const auto& m = setup_->model;
    if (opt_.N < 2) throw std::invalid_argument("grid size must be at least 2");
    if (!(scale_ > 0)) throw std::invalid_argument("flux unit must be positive");
    if (!m.is_abelian()) throw std::invalid_argument("discretization requires a flat torus model (nonzero structure constants)");
    for (const auto& g : setup_->gamma)
      if (!g.is_zero()) throw std::invalid_argument("discretization requires a trivial fiber connection");
    dims_ = opt_.reduced ? m.q() : m.n();
    first_ = opt_.reduced ? m.p() : 0;
    length_ = std::sqrt(scale_);
    h_ = length_ / opt_.N;
    sites_ = 1;
    for (int d = 0; d < dims_; ++d) {
      if (sites_ > (std::size_t(1) << 40) / static_cast<std::size_t>(opt_.N)) throw std::invalid_argument("lattice too large");
      sites_ *= static_cast<std::size_t>(opt_.N);
    }
    // Chern numbers k B(u, v) s / (2 pi i) must be integers for every plane.
    for (int u = 0; u < m.n(); ++u)
      for (int v = u + 1; v < m.n(); ++v) {
        const Scalar f = setup_->line_curvature(u, v);
        if (f.is_zero()) continue;
        const double c = f.im.to_double() * scale_ / (2 * std::numbers::pi);
        if (!f.re.is_zero() || std::abs(c - std::round(c)) > 1e-9)
          throw std::invalid_argument("non-integer Chern number " + std::to_string(c) + " in plane (" + m.label(u) + ", " +
                                      m.label(v) + ")");
      }
    if (!opt_.gauge.empty() && opt_.gauge.size() != sites_) throw std::invalid_argument("gauge has wrong number of sites");
    build_links();
  }

  const SetupPtr& setup() const { return setup_; }
  int N() const { return opt_.N; }
  bool reduced() const { return opt_.reduced; }
  double scale() const { return scale_; }
  double spacing() const { return h_; }  // in formal units
  std::size_t sites() const { return sites_; }
  std::size_t dimension() const { return sites_ * setup_->dim; }

  /// Lattice axis of frame direction u, or -1 for a suppressed leaf direction.
  int axis(int u) const { return u < first_ ? -1 : u - first_; }

  std::size_t neighbor(std::size_t site, int ax) const {
    std::size_t stride = 1;
    for (int d = 0; d < ax; ++d) stride *= opt_.N;
    const std::size_t c = (site / stride) % opt_.N;
    return c + 1 == static_cast<std::size_t>(opt_.N) ? site - c * stride : site + stride;
  }

  int coordinate(std::size_t site, int ax) const {
    for (int d = 0; d < ax; ++d) site /= opt_.N;
    return static_cast<int>(site % opt_.N);
  }

  /// Parallel transport from site + e_ax to site.
  cdouble link(std::size_t site, int ax) const { return links_[ax][site]; }

  /// exp(i * flux through the (ax, bx) cell at `site`), flux = i * curvature.
  cdouble plaquette_phase(std::size_t site, int ax, int bx) const {
    const cdouble w = link(site, ax) * link(neighbor(site, ax), bx) * std::conj(link(neighbor(site, bx), ax)) *
                      std::conj(link(site, bx));
    return std::conj(w);
  }

  /// Shift operator (T psi)(x) = U(x) psi(x + e) on scalar lattice functions.
  SparseC shift(int ax) const {
    std::vector<Eigen::Triplet<cdouble>> t;
    t.reserve(sites_);
    for (std::size_t s = 0; s < sites_; ++s) t.emplace_back(s, neighbor(s, ax), link(s, ax));
    SparseC m(sites_, sites_);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

 private:
  void build_links() {
    links_.assign(dims_, std::vector<cdouble>(sites_, cdouble(1)));
    // Landau gauge A_v = sum_{u < v} F(u, v) x_u, with compensating phases on wrap links.
    for (std::size_t s = 0; s < sites_; ++s) {
      for (int bx = 0; bx < dims_; ++bx) {
        const int v = bx + first_;
        cdouble phase_arg = 0;
        for (int ax = 0; ax < bx; ++ax) {
          const int u = ax + first_;
          phase_arg += to_cdouble(setup_->line_curvature(u, v)) * (h_ * h_ * coordinate(s, ax));
        }
        if (coordinate(s, bx) == opt_.N - 1)
          for (int cx = bx + 1; cx < dims_; ++cx) {
            const int w = cx + first_;
            phase_arg -= to_cdouble(setup_->line_curvature(v, w)) * (length_ * h_ * coordinate(s, cx));
          }
        cdouble u = std::exp(phase_arg);
        if (!opt_.gauge.empty()) u = opt_.gauge[s] * u * std::conj(opt_.gauge[neighbor(s, bx)]);
        links_[bx][s] = u;
      }
    }
  }

  SetupPtr setup_;
  double scale_;
  LatticeOptions opt_;
  int dims_ = 0, first_ = 0;
  double length_ = 1, h_ = 1;
  std::size_t sites_ = 1;
  std::vector<std::vector<cdouble>> links_;
};

namespace detail {

inline SparseC kron_fiber(const SparseC& spatial, const FiberEndo& a) {
  const std::size_t dim = a.rows();
  std::vector<Eigen::Triplet<cdouble>> t;
  std::vector<std::pair<std::size_t, std::size_t>> nz;
  std::vector<cdouble> val;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      if (!a(i, j).is_zero()) {
        nz.emplace_back(i, j);
        val.push_back(to_cdouble(a(i, j)));
      }
  t.reserve(static_cast<std::size_t>(spatial.nonZeros()) * nz.size());
  for (int col = 0; col < spatial.outerSize(); ++col)
    for (SparseC::InnerIterator it(spatial, col); it; ++it)
      for (std::size_t e = 0; e < nz.size(); ++e)
        t.emplace_back(it.row() * dim + nz[e].first, it.col() * dim + nz[e].second, it.value() * val[e]);
  SparseC m(spatial.rows() * dim, spatial.cols() * dim);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace detail

/// Lattice matrix of a normal-ordered operator: runs of equal indices become
/// powers of the second difference (T + T^* - 2)/h^2, with one central
/// difference (T - T^*)/(2h) for odd run length; leaf derivatives vanish in
/// the reduced sector.
inline SparseC assemble(const DiffOp& op, const Lattice& lat) {
  if (op.setup() != lat.setup()) throw std::invalid_argument("operator and lattice use different bundle setups");
  const std::size_t ns = lat.sites();
  SparseC id(ns, ns);
  id.setIdentity();
  std::vector<SparseC> central, second;
  const int axes = lat.reduced() ? lat.setup()->q() : lat.setup()->n();
  const double h = lat.spacing();
  for (int ax = 0; ax < axes; ++ax) {
    const SparseC t = lat.shift(ax);
    const SparseC tt = SparseC(t.adjoint());
    central.push_back((t - tt) * cdouble(1.0 / (2 * h)));
    second.push_back((t + tt - id * cdouble(2)) * cdouble(1.0 / (h * h)));
  }
  SparseC out(lat.dimension(), lat.dimension());
  for (const auto& [word, coeff] : op.terms()) {
    SparseC spatial = id;
    bool vanishes = false;
    for (std::size_t i = 0; i < word.size();) {
      std::size_t j = i;
      while (j < word.size() && word[j] == word[i]) ++j;
      const int ax = lat.axis(word[i]);
      if (ax < 0) {
        vanishes = true;
        break;
      }
      std::size_t run = j - i;
      if (run % 2 == 1) spatial = SparseC(spatial * central[ax]);
      for (run /= 2; run > 0; --run) spatial = SparseC(spatial * second[ax]);
      i = j;
    }
    if (vanishes) continue;
    out += detail::kron_fiber(spatial, coeff);
  }
  out *= cdouble(lat.scale());
  out.prune(cdouble(0));
  return out;
}

/// Hermitian lattice operator with a fiber grading.
struct LatticeOperator {
  int k = 0;
  int N = 0;
  bool reduced = true;
  SparseC matrix;
  std::vector<bool> odd;   // per row
  double hermitian_defect = 0;  // before symmetrization
  cdouble plaquette_phase = 1;  // first transverse plane at the origin
};

inline std::vector<bool> fiber_parity(const FiberBundleSetup& s) {
  std::vector<bool> odd(s.dim, false);
  for (std::size_t i = 0; i < s.dim; ++i) {
    if (s.kind == FiberKind::Spinor) odd[i] = SpinorFiber{s.q() / 2, s.twist}.is_odd(i);
    if (s.kind == FiberKind::Forms) odd[i] = std::popcount(static_cast<Mask>(i)) % 2 == 1;
  }
  return odd;
}

inline double max_abs(const SparseC& m) {
  double r = 0;
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseC::InnerIterator it(m, c); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

/// Discretizes a formally self-adjoint operator; the result is symmetrized
/// after a relative defect check of 1e-12.
inline LatticeOperator discretize(const DiffOp& op, const Lattice& lat) {
  LatticeOperator out;
  out.k = lat.setup()->k;
  out.N = lat.N();
  out.reduced = lat.reduced();
  const SparseC a = assemble(op, lat);
  const SparseC at = SparseC(a.adjoint());
  const double scale = std::max(1.0, max_abs(a));
  out.hermitian_defect = max_abs(SparseC(a - at)) / scale;
  if (out.hermitian_defect > 1e-12)
    throw std::invalid_argument("operator is not self-adjoint on the lattice (defect " + std::to_string(out.hermitian_defect) + ")");
  out.matrix = (a + at) * cdouble(0.5);
  const auto par = fiber_parity(*lat.setup());
  out.odd.resize(lat.dimension());
  for (std::size_t i = 0; i < lat.dimension(); ++i) out.odd[i] = par[i % lat.setup()->dim];
  if (lat.setup()->q() >= 2) out.plaquette_phase = lat.plaquette_phase(0, 0, 1);
  return out;
}

// ---------------------------------------------------------------------------
// Eigensolvers

enum class Solver { Auto, Dense, Krylov };

inline Eigen::MatrixXcd to_dense(const SparseC& m) { return Eigen::MatrixXcd(m); }

inline std::vector<double> dense_eigenvalues(const Eigen::MatrixXcd& h) {
  if (h.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

/// Lowest `count` eigenvalues of a Hermitian sparse matrix by block Krylov
/// iteration on the shift-inverted operator with full reorthogonalization
/// and Rayleigh-Ritz on the original matrix.
inline std::vector<double> krylov_lowest(const SparseC& h, int count, std::uint64_t seed = 1, double tol = 1e-10) {
  const Eigen::Index n = h.rows();
  if (count <= 0) return {};
  if (count > n) count = static_cast<int>(n);
  double norm = 0;
  for (int c = 0; c < h.outerSize(); ++c) {
    double row = 0;
    for (SparseC::InnerIterator it(h, c); it; ++it) row += std::abs(it.value());
    norm = std::max(norm, row);
  }
  const double sigma = -1.0 - 1e-3 * norm;
  SparseC shifted = h;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
  shifted.makeCompressed();
  Eigen::SparseLU<SparseC> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse factorization failed");

  const int block = 8;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd q(n, 0);
  auto orthonormalize_into = [&](Eigen::MatrixXcd v) {
    for (int pass = 0; pass < 2; ++pass)
      if (q.cols() > 0) v -= q * (q.adjoint() * v);
    int added = 0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      Eigen::VectorXcd x = v.col(c);
      for (int pass = 0; pass < 2; ++pass)
        if (q.cols() > 0) x -= q * (q.adjoint() * x);
      const double nx = x.norm();
      if (nx < 1e-10) continue;
      q.conservativeResize(n, q.cols() + 1);
      q.col(q.cols() - 1) = x / nx;
      ++added;
    }
    return added;
  };
  Eigen::MatrixXcd start(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < block; ++c) start(i, c) = cdouble(nd(rng), nd(rng));
  orthonormalize_into(start);
  Eigen::Index last = 0;
  std::vector<double> residuals;
  while (true) {
    const Eigen::MatrixXcd hq = h * q;
    const Eigen::MatrixXcd small = q.adjoint() * hq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(small);
    if (es.info() != Eigen::Success) throw NumericalError("projected eigensolver failed");
    if (q.cols() >= count) {
      residuals.clear();
      bool ok = true;
      for (int i = 0; i < count; ++i) {
        const Eigen::VectorXcd y = q * es.eigenvectors().col(i);
        const double r = (hq * es.eigenvectors().col(i) - es.eigenvalues()(i) * y).norm();
        residuals.push_back(r);
        if (r > tol * std::max(1.0, norm)) ok = false;
      }
      if (ok || q.cols() == n) {
        if (!ok) {
          std::ostringstream os;
          os << "Krylov solver did not converge; residual norms:";
          for (double r : residuals) os << ' ' << r;
          throw NumericalError(os.str());
        }
        return {es.eigenvalues().data(), es.eigenvalues().data() + count};
      }
    }
    const Eigen::MatrixXcd prev = q.rightCols(q.cols() - last);
    last = q.cols();
    Eigen::MatrixXcd next(n, prev.cols());
    for (Eigen::Index c = 0; c < prev.cols(); ++c) {
      next.col(c) = lu.solve(Eigen::VectorXcd(prev.col(c)));
      if (lu.info() != Eigen::Success) throw NumericalError("sparse solve failed");
    }
    if (orthonormalize_into(next) == 0) {
      // Invariant subspace reached; restart with a fresh random block.
      for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < block; ++c) start(i, c) = cdouble(nd(rng), nd(rng));
      if (orthonormalize_into(start) == 0 && q.cols() < n) throw NumericalError("Krylov basis stagnated");
    }
  }
}

/// Lowest `count` eigenvalues (all when count < 0), ascending.
inline std::vector<double> eigen(const SparseC& h, int count = -1, Solver solver = Solver::Auto) {
  const auto n = static_cast<int>(h.rows());
  if (count < 0 || count > n) count = n;
  if (solver == Solver::Auto) solver = (n <= 4096 || count * 4 > n) ? Solver::Dense : Solver::Krylov;
  if (solver == Solver::Dense) {
    auto ev = dense_eigenvalues(to_dense(h));
    ev.resize(count);
    return ev;
  }
  return krylov_lowest(h, count);
}

/// Restriction to the even or odd fiber sector; fails if the operator mixes sectors.
inline SparseC sector(const LatticeOperator& op, bool odd) {
  std::vector<Eigen::Index> map(op.odd.size(), -1);
  Eigen::Index next = 0;
  for (std::size_t i = 0; i < op.odd.size(); ++i)
    if (op.odd[i] == odd) map[i] = next++;
  std::vector<Eigen::Triplet<cdouble>> t;
  for (int c = 0; c < op.matrix.outerSize(); ++c)
    for (SparseC::InnerIterator it(op.matrix, c); it; ++it) {
      const bool ro = op.odd[it.row()], co = op.odd[it.col()];
      if (ro != co) {
        if (std::abs(it.value()) > 1e-12) throw std::invalid_argument("operator does not preserve the fiber grading");
        continue;
      }
      if (ro == odd) t.emplace_back(map[it.row()], map[it.col()], it.value());
    }
  SparseC m(next, next);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// ---------------------------------------------------------------------------
// Torus models and reports

/// A flat-torus model with a quantized line bundle.
struct TorusModel {
  FrameModel model;
  ComplexMatrix B;  // formal units
  ComplexStructure J = ComplexStructure::standard_structure(2);
  double scale = 1;  // flux unit s
  int twist = 1;
  std::optional<Mutation> mutation;

  static TorusModel from_file(const ModelFile& f) {
    if (!f.line_bundle) throw std::invalid_argument("spectral commands need a model with a line bundle");
    if (!f.model.is_abelian()) throw std::invalid_argument("spectral commands need a flat torus model");
    TorusModel t;
    t.model = f.model;
    t.B = *f.line_bundle;
    t.J = f.complex_structure();
    t.scale = f.flux_unit_2pi ? 2 * std::numbers::pi : 1.0;
    t.twist = f.twist_dim;
    t.mutation = f.mutation;
    return t;
  }

  SkewInvariants invariants() const { return skew_invariants(TwoForm(B)); }
  /// m and lambda on the unit torus.
  double m() const { return scale * invariants().m.to_double(); }
  double lambda() const { return scale * invariants().lambda.to_double(); }

  SetupPtr spinor(int k) const { return make_spinor_setup(model, J, twist, k, B); }
  SetupPtr plain(int k) const { return make_plain_setup(model, 1, k, B); }
};

struct SpectrumReport {
  int k = 0;
  int N = 0;
  double m = 0, lambda = 0;
  double two_km = 0;
  std::vector<double> eigenvalues;  // both sectors, ascending
  std::vector<double> even, odd;
  double threshold = 0;
  double gap = 0;
  int kernel_dim_even = 0, kernel_dim_odd = 0;
  double min_eigenvalue = 0;
  bool ambiguous = false;
  std::string note;
  double hermitian_defect = 0;
  cdouble plaquette_phase = 1;
  double runtime_ms = 0;
};

/// Smallest nonzero eigenvalue of the scalar lattice Laplacian on the unit torus.
inline double flat_laplacian_gap(int N) {
  const double s = std::sin(std::numbers::pi / N);
  return 4.0 * N * N * s * s;
}

inline LatticeOperator lattice_dirac_square(const TorusModel& t, int k, int N, bool reduced = true,
                                            std::vector<cdouble> gauge = {}) {
  const SetupPtr s = t.spinor(k);
  ConnectionData data = s->geometry;
  if (t.mutation) apply_mutation(data, *t.mutation);
  const Lattice lat(s, t.scale, {N, reduced, std::move(gauge)});
  return discretize(build_lichnerowicz_rhs(s, data), lat);
}

/// Spectrum of D_k^2 with kernel counts per sector.
inline SpectrumReport spectrum(const TorusModel& t, int k, int N, Solver solver = Solver::Auto) {
  const auto t0 = std::chrono::steady_clock::now();
  SpectrumReport r;
  r.k = k;
  r.N = N;
  r.m = t.m();
  r.lambda = t.lambda();
  r.two_km = 2 * k * r.m;
  const LatticeOperator op = lattice_dirac_square(t, k, N);
  r.hermitian_defect = op.hermitian_defect;
  r.plaquette_phase = op.plaquette_phase;
  r.even = eigen(sector(op, false), -1, solver);
  r.odd = eigen(sector(op, true), -1, solver);
  r.eigenvalues = r.even;
  r.eigenvalues.insert(r.eigenvalues.end(), r.odd.begin(), r.odd.end());
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end());
  r.min_eigenvalue = r.eigenvalues.empty() ? 0 : r.eigenvalues.front();
  const double estimate = k >= 1 ? r.two_km : flat_laplacian_gap(N);
  r.threshold = estimate / 10;
  for (double e : r.even) r.kernel_dim_even += e < r.threshold;
  for (double e : r.odd) r.kernel_dim_odd += e < r.threshold;
  r.gap = std::numeric_limits<double>::infinity();
  for (double e : r.eigenvalues)
    if (e >= r.threshold) {
      r.gap = e;
      break;
    }
  for (double e : r.eigenvalues)
    if (e >= r.threshold && e < 3 * r.threshold) {
      r.ambiguous = true;
      r.note = "ambiguous cluster: eigenvalue " + std::to_string(e) + " between kernel threshold and gap estimate";
      break;
    }
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Reports for k = kmin..kmax, computed concurrently and returned in order.
inline std::vector<SpectrumReport> gap_scan(const TorusModel& t, int kmin, int kmax, int N, Solver solver = Solver::Auto) {
  if (kmin > kmax) throw std::invalid_argument("empty k range");
  std::vector<std::future<SpectrumReport>> jobs;
  for (int k = kmin; k <= kmax; ++k) jobs.push_back(std::async(std::launch::async, [&t, k, N, solver] { return spectrum(t, k, N, solver); }));
  std::vector<SpectrumReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

/// max(0, max_k (2km - gap_k)) over k >= 1.
inline double fitted_C(const std::vector<SpectrumReport>& reps) {
  double c = 0;
  for (const auto& r : reps)
    if (r.k >= 1) c = std::max(c, r.two_km - r.gap);
  return c;
}

/// Eigenvalues within `tol` relative distance of 2km j, counted per level j = 0..levels.
struct LevelCheck {
  std::vector<int> counts;  // per level
  int stray = 0;            // eigenvalues below the top level not near any level
  bool ok = false;
};

inline LevelCheck landau_levels(const SpectrumReport& r, int levels, double tol) {
  LevelCheck c;
  c.counts.assign(levels + 1, 0);
  const double spacing = r.two_km;
  for (double e : r.eigenvalues) {
    if (e > spacing * (levels + 0.5)) break;
    if (e < r.threshold) {
      ++c.counts[0];
      continue;
    }
    const int j = static_cast<int>(std::lround(e / spacing));
    if (j >= 1 && j <= levels && std::abs(e - j * spacing) <= tol * j * spacing) {
      ++c.counts[j];
    } else {
      ++c.stray;
    }
  }
  c.ok = c.stray == 0;
  for (int j = 1; j <= levels; ++j) c.ok = c.ok && c.counts[j] > 0;
  return c;
}

struct BochnerGroundRow {
  int k = 0;
  double min_eigenvalue = 0;  // of the Bochner Laplacian on L^k
  double k_lambda = 0;
  double bound = 0;           // min - k lambda
  double C = 0;               // -bound
};

inline std::vector<BochnerGroundRow> bochner_ground_estimate(const TorusModel& t, int kmin, int kmax, int N) {
  std::vector<BochnerGroundRow> out;
  for (int k = kmin; k <= kmax; ++k) {
    const SetupPtr s = t.plain(k);
    const Lattice lat(s, t.scale, {N, true, {}});
    const auto op = discretize(build_bochner(s), lat);
    BochnerGroundRow row;
    row.k = k;
    row.min_eigenvalue = eigen(op.matrix, 1).front();
    row.k_lambda = k * t.lambda();
    row.bound = row.min_eigenvalue - row.k_lambda;
    row.C = -row.bound;
    out.push_back(row);
  }
  return out;
}

/// Max over random sections of |(L - R) x| / max(|L x|, |R x|) for the two
/// lattice discretizations.
inline double cross_validate(const DiffOp& lhs, const DiffOp& rhs, const Lattice& lat, int trials, std::uint64_t seed) {
  const SparseC l = assemble(lhs, lat), r = assemble(rhs, lat);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd x(static_cast<Eigen::Index>(lat.dimension()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cdouble(nd(rng), nd(rng));
    const Eigen::VectorXcd lx = l * x, rx = r * x;
    const double denom = std::max({lx.norm(), rx.norm(), 1e-300});
    worst = std::max(worst, (lx - rx).norm() / denom);
  }
  return worst;
}

}  // namespace tdirac
