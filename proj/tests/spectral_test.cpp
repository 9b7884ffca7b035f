#include "tdirac/spectral.hpp"
#include "test_models.hpp"

#include <gtest/gtest.h>

using namespace tdirac;

namespace {

std::string fixture(const std::string& name) { return std::string(TDIRAC_MODEL_DIR) + "/" + name + ".json"; }

TorusModel landau() { return TorusModel::from_file(load_model(fixture("t3_landau"))); }

constexpr double kPi = std::numbers::pi;

std::vector<cdouble> random_gauge(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 2 * kPi);
  std::vector<cdouble> g(n);
  for (auto& z : g) z = std::polar(1.0, u(rng));
  return g;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Lattice, FlatLaplacianMatchesDiscreteFourierSpectrum) {
  const auto t = landau();
  const int n = 8;
  const auto s = t.plain(0);
  const Lattice lat(s, t.scale, {n, true, {}});
  const auto op = discretize(build_bochner(s), lat);
  std::vector<double> expected;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      expected.push_back(4.0 * n * n * (std::pow(std::sin(kPi * a / n), 2) + std::pow(std::sin(kPi * b / n), 2)));
  std::sort(expected.begin(), expected.end());
  EXPECT_LT(max_diff(eigen(op.matrix), expected), 1e-9);
  EXPECT_NEAR(expected[1], flat_laplacian_gap(n), 1e-12);
}

TEST(Lattice, ExactlyHermitianAndPlaquettePhase) {
  const auto t = landau();
  const auto s = t.spinor(1);
  const Lattice lat(s, t.scale, {16, true, {}});
  const auto op = discretize(build_lichnerowicz_rhs(s), lat);
  EXPECT_LT(op.hermitian_defect, 1e-14);
  EXPECT_EQ(max_abs(SparseC(op.matrix - SparseC(op.matrix.adjoint()))), 0.0);
  const cdouble expected = std::polar(1.0, 2 * kPi / 256);
  for (std::size_t site = 0; site < lat.sites(); ++site) EXPECT_LT(std::abs(lat.plaquette_phase(site, 0, 1) - expected), 1e-12) << site;
  EXPECT_LT(std::abs(op.plaquette_phase - expected), 1e-12);
}

TEST(Lattice, FluxQuantizationAndModelChecks) {
  auto half = landau();
  half.B(0, 1) = Scalar(QSqrt2(), QSqrt2(Rational(-1, 2)));
  half.B(1, 0) = Scalar(QSqrt2(), QSqrt2(Rational(1, 2)));
  try {
    lattice_dirac_square(half, 1, 8);
    FAIL() << "expected error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("non-integer Chern number"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(lattice_dirac_square(half, 2, 8));
  // Formal unit flux is not realizable on a lattice.
  auto formal = landau();
  formal.scale = 1;
  EXPECT_THROW(lattice_dirac_square(formal, 1, 8), std::invalid_argument);
  const auto heis = make_spinor_setup(testmodels::heisenberg(), ComplexStructure::standard_structure(2));
  EXPECT_THROW(Lattice(heis, 1.0, {8, true, {}}), std::invalid_argument);
  EXPECT_THROW(TorusModel::from_file(load_model(fixture("heisenberg"))), std::invalid_argument);
}

TEST(Lattice, RejectsNonSelfAdjointOperators) {
  const auto s = make_form_setup(testmodels::flat_t3());
  const Lattice lat(s, 1.0, {6, true, {}});
  EXPECT_THROW(discretize(build_dH(s), lat), std::invalid_argument);
  EXPECT_NO_THROW(discretize(build_deltaH(s), lat));
}

TEST(Lattice, GaugeTransformationPreservesSpectrum) {
  const auto t = landau();
  for (int k : {1, 3}) {
    const auto base = eigen(lattice_dirac_square(t, k, 8).matrix);
    const auto gauged = eigen(lattice_dirac_square(t, k, 8, true, random_gauge(64, 17 + k)).matrix);
    EXPECT_LT(max_diff(base, gauged), 1e-10) << k;
  }
}

TEST(Lattice, FullAssemblyRepeatsReducedSpectrum) {
  const auto t = landau();
  const int n = 6;
  const auto reduced = eigen(lattice_dirac_square(t, 1, n).matrix);
  const auto full = eigen(lattice_dirac_square(t, 1, n, false).matrix);
  ASSERT_EQ(full.size(), reduced.size() * n);
  std::vector<double> repeated;
  for (double e : reduced)
    for (int i = 0; i < n; ++i) repeated.push_back(e);
  EXPECT_LT(max_diff(full, repeated), 1e-9);
}

TEST(Eigen, IdentityAndDegenerateSpectra) {
  SparseC id(10, 10);
  id.setIdentity();
  for (double e : eigen(id)) EXPECT_NEAR(e, 1.0, 1e-14);
  SparseC d(300, 300);
  for (int i = 0; i < 300; ++i) d.insert(i, i) = cdouble(i < 5 ? 0.5 : 2.0 + i);
  const auto low = krylov_lowest(d, 7);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(low[i], 0.5, 1e-10);
  EXPECT_NEAR(low[5], 7.0, 1e-10);
  EXPECT_NEAR(low[6], 8.0, 1e-10);
}

TEST(Eigen, DenseAndKrylovAgree) {
  const auto op = lattice_dirac_square(landau(), 1, 12);
  const auto dense = eigen(op.matrix, 20, Solver::Dense);
  const auto krylov = eigen(op.matrix, 20, Solver::Krylov);
  EXPECT_LT(max_diff(dense, krylov), 1e-8);
}

TEST(Spectrum, GapNearLandauOracle) {
  const auto t = landau();
  EXPECT_NEAR(t.m(), 2 * kPi, 1e-12);
  EXPECT_NEAR(t.lambda(), 2 * kPi, 1e-12);
  for (int k : {1, 2}) {
    const auto r = spectrum(t, k, 16);
    EXPECT_NEAR(r.gap, 4 * kPi * k, 0.05 * 4 * kPi * k) << k;
    EXPECT_EQ(r.kernel_dim_odd, 0) << k;
    EXPECT_EQ(r.kernel_dim_even, k) << k;
    EXPECT_FALSE(r.ambiguous);
    const auto levels = landau_levels(r, 3, 0.05);
    EXPECT_TRUE(levels.ok) << k;
    EXPECT_EQ(levels.counts[0], k);
    for (int j = 1; j <= 3; ++j) EXPECT_EQ(levels.counts[j], 2 * k) << k << " " << j;
  }
}

TEST(Spectrum, SecondOrderConvergence) {
  const auto t = landau();
  std::vector<double> err;
  for (int n : {8, 16, 32}) err.push_back(std::abs(spectrum(t, 1, n).gap - 4 * kPi));
  EXPECT_GT(err[0] / err[1], 3.5);
  EXPECT_LT(err[0] / err[1], 4.5);
  EXPECT_GT(err[1] / err[2], 3.5);
  EXPECT_LT(err[1] / err[2], 4.5);
}

TEST(Spectrum, KernelClusterShrinksWithRefinement) {
  // The lattice Landau ground level sits slightly below the continuum value,
  // so the kernel cluster is negative at O(h^2).
  const auto t = landau();
  const double a = spectrum(t, 2, 8).min_eigenvalue, b = spectrum(t, 2, 16).min_eigenvalue;
  EXPECT_LT(std::abs(b), std::abs(a) / 3.5);
  EXPECT_LT(std::abs(b), 0.1);
}

TEST(Spectrum, ZeroTwistHasOddKernel) {
  const auto r = spectrum(landau(), 0, 8);
  EXPECT_EQ(r.kernel_dim_odd, 1);
  EXPECT_EQ(r.kernel_dim_even, 1);
  EXPECT_NEAR(r.gap, flat_laplacian_gap(8), 1e-9);
}

TEST(Spectrum, GapIncreasesWithK) {
  const auto reps = gap_scan(landau(), 1, 4, 16);
  for (std::size_t i = 1; i < reps.size(); ++i) EXPECT_GT(reps[i].gap, reps[i - 1].gap);
  // Lattice deficit only; at N = 16 it stays below 5% of the largest 2km.
  EXPECT_GE(fitted_C(reps), 0.0);
  EXPECT_LE(fitted_C(reps), 0.05 * reps.back().two_km);
}

TEST(Spectrum, ScanIsDeterministicAndOrdered) {
  const auto a = gap_scan(landau(), 1, 3, 8), b = gap_scan(landau(), 1, 3, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].k, static_cast<int>(i) + 1);
    EXPECT_EQ(a[i].eigenvalues, b[i].eigenvalues);
  }
  EXPECT_THROW(gap_scan(landau(), 3, 1, 8), std::invalid_argument);
}

TEST(BochnerGround, LevelNearKLambda) {
  const auto rows = bochner_ground_estimate(landau(), 0, 4, 16);
  EXPECT_NEAR(rows[0].min_eigenvalue, 0.0, 1e-9);
  EXPECT_NEAR(rows[1].min_eigenvalue, 2 * kPi, 0.05 * 2 * kPi);
  for (const auto& r : rows) EXPECT_GE(r.bound, -0.5) << r.k;
}

TEST(CrossValidate, ComposedSquareMatchesRhs) {
  const auto t = landau();
  const auto s = t.spinor(1);
  const Lattice lat(s, t.scale, {8, true, {}});
  const DiffOp d = build_dirac(s);
  EXPECT_LE(cross_validate(compose(d, d), build_lichnerowicz_rhs(s), lat, 20, 1), 1e-8);
  EXPECT_EQ(cross_validate(d, d, lat, 5, 2), 0.0);
}

TEST(CrossValidate, DetectsCorruptedScalarCurvature) {
  const auto t = landau();
  const auto s = t.spinor(1);
  const Lattice lat(s, t.scale, {8, true, {}});
  ConnectionData bad = s->geometry;
  apply_mutation(bad, {"K", {}, QSqrt2(1)});
  const DiffOp d = build_dirac(s);
  EXPECT_GT(cross_validate(compose(d, d), build_lichnerowicz_rhs(s, bad), lat, 20, 1), 1e-4);
  // Shifting K by 1 shifts the constant term by s/4 on the unit torus.
  const SparseC diff = assemble(build_lichnerowicz_rhs(s, bad), lat) - assemble(build_lichnerowicz_rhs(s), lat);
  EXPECT_NEAR(max_abs(diff), t.scale / 4, 1e-12);
}
