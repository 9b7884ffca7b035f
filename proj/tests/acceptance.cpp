// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "tdirac/tdirac.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

using namespace tdirac;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fixture(const std::string& name) { return std::string(TDIRAC_MODEL_DIR) + "/" + name + ".json"; }

const std::vector<std::string> kFixtures = {"flat_t3", "heisenberg", "sol"};

struct Check {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& why) {
    if (!cond) {
      if (!ok) detail << "; ";
      ok = false;
      detail << why;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

// Identity suite on the three exact fixtures.
Check criterion1() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream summary;
  for (const auto& name : kFixtures) {
    const SuiteReport r = verify_suite(suite_input(load_model(fixture(name))));
    for (const auto& i : r.items) {
      if (i.status == "reported") continue;
      if (i.status == "skipped") {
        c.require(i.label == "i", name + ": item " + i.label + " skipped");
        continue;
      }
      c.require(i.status == "pass" && i.exact_zero && i.residual.is_zero(), name + ": item " + i.label + " residual " + i.residual.to_string());
    }
    std::string h;
    for (const auto& i : r.items)
      if (i.status == "reported") h += " " + i.label + "=" + (i.exact_zero ? "0" : i.residual.to_string());
    summary << name << " " << r.passed_count() << " exact (h:" << h << ") ";
  }
  const double t = seconds_since(t0);
  c.require(t < 10, "runtime " + fmt(t) + " s exceeds 10 s");
  if (c.ok) c.detail << summary.str() << "in " << fmt(t, 3) << " s";
  return c;
}

// Lowest-weight identity and odd-sector lower bound on random compatible pairs.
Check criterion2() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream summary;
  for (int q : {2, 4, 6}) {
    std::mt19937_64 rng(1000 + q);
    int passed = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const CompatiblePair pair = random_compatible_pair(q, rng);
      const QSqrt2 residual = check_rl1(pair.b, pair.j);
      const OddBound bound = odd_lower_bound(pair.b, pair.j);
      const bool ok = residual.is_zero() && bound.exact && bound.margin >= QSqrt2();
      if (ok) ++passed;
      else if (c.ok) c.require(false, "q=" + std::to_string(q) + " trial " + std::to_string(trial) + " B=" + matrix_to_string(pair.b.matrix()));
    }
    summary << "q=" << q << " " << passed << "/1000 ";
  }
  const double t = seconds_since(t0);
  c.require(t < 30, "runtime " + fmt(t) + " s exceeds 30 s");
  if (c.ok) c.detail << summary.str() << "in " << fmt(t, 3) << " s";
  return c;
}

// Gap and Landau clusters at N = 32.
Check criterion3(const std::vector<SpectrumReport>& reps, double seconds) {
  Check c;
  std::ostringstream summary;
  for (const auto& r : reps) {
    const double rel = (r.gap - 4 * kPi * r.k) / (4 * kPi * r.k);
    c.require(std::abs(rel) <= 0.05, "k=" + std::to_string(r.k) + " gap " + fmt(r.gap) + " off by " + fmt(100 * rel) + "%");
    const LevelCheck levels = landau_levels(r, 3, 0.05);
    c.require(levels.ok, "k=" + std::to_string(r.k) + " eigenvalues outside Landau clusters");
    summary << "k=" << r.k << " " << fmt(100 * rel, 2) << "% ";
  }
  const double C = fitted_C(reps);
  c.require(C <= 0.5, "fitted C " + fmt(C) + " > 0.5");
  c.require(seconds < 120, "runtime " + fmt(seconds) + " s exceeds 120 s");
  if (c.ok) c.detail << summary.str() << "C=" << fmt(C, 3) << " in " << fmt(seconds, 3) << " s";
  return c;
}

// Odd kernel empty, even kernel of dimension k.
Check criterion4(const std::vector<SpectrumReport>& reps) {
  Check c;
  std::ostringstream summary;
  for (const auto& r : reps) {
    c.require(r.kernel_dim_odd == 0, "k=" + std::to_string(r.k) + " odd kernel " + std::to_string(r.kernel_dim_odd));
    c.require(r.kernel_dim_even == r.k, "k=" + std::to_string(r.k) + " even kernel " + std::to_string(r.kernel_dim_even));
    c.require(!r.ambiguous, "k=" + std::to_string(r.k) + " " + r.note);
    summary << "k=" << r.k << " (" << r.kernel_dim_even << "," << r.kernel_dim_odd << ") ";
  }
  if (c.ok) c.detail << "(even,odd) " << summary.str();
  return c;
}

// Bochner ground level on L^k minus k lambda.
Check criterion5(const TorusModel& t) {
  Check c;
  const auto rows = bochner_ground_estimate(t, 1, 4, 32);
  std::ostringstream summary;
  for (const auto& r : rows) {
    c.require(r.bound >= -0.5, "k=" + std::to_string(r.k) + " min - k lambda = " + fmt(r.bound));
    summary << "k=" << r.k << " " << fmt(r.bound, 3) << " ";
  }
  if (c.ok) c.detail << "min - k lambda: " << summary.str();
  return c;
}

// Composed square against the discretized right-hand sides.
Check criterion6(const TorusModel& t) {
  Check c;
  double worst = 0;
  for (int k = 1; k <= 4; ++k) {
    const SetupPtr s = t.spinor(k);
    const Lattice lat(s, t.scale, {8, true, {}});
    const DiffOp d = build_dirac(s);
    const double r = cross_validate(compose(d, d), build_lichnerowicz_rhs(s), lat, 20, 100 + k);
    c.require(r <= 1e-8, "k=" + std::to_string(k) + " residual " + fmt(r));
    worst = std::max(worst, r);
  }
  const SuiteOperators ops = suite_operators(suite_input(load_model(fixture("t3_landau"))));
  for (const auto& p : ops.pairs) {
    if (!p.skip_reason.empty() || p.reported) continue;
    const Lattice lat(p.lhs->setup(), t.scale, {8, true, {}});
    const double r = cross_validate(*p.lhs, *p.rhs, lat, 20, 7);
    c.require(r <= 1e-8, "identity " + p.label + " residual " + fmt(r));
    worst = std::max(worst, r);
  }
  if (c.ok) c.detail << "max relative residual " << fmt(worst, 3);
  return c;
}

FiberEndo form_degree_parity(const SetupPtr& s) {
  FiberEndo g = s->identity();
  for (std::size_t a = 0; a < s->eps.size(); ++a) g = g * (s->identity() - Scalar(QSqrt2(2)) * (s->eps[a] * s->iota[a]));
  return g;
}

bool odd_for(const DiffOp& d, const FiberEndo& g) {
  for (const auto& [w, a] : d.terms())
    if (!(g * a + a * g).is_zero()) return false;
  return true;
}

// Self-adjointness, oddness, lattice hermiticity, gauge invariance.
Check criterion7(const TorusModel& t) {
  Check c;
  for (const auto& name : kFixtures) {
    const ModelFile f = load_model(fixture(name));
    const SuiteInput in = suite_input(f);
    const SetupPtr s = make_spinor_setup(in.model, in.J, in.twist, in.k, in.B);
    const DiffOp d = build_dirac(s);
    c.require(verify_identity(adjoint(d), d).exact_zero, name + ": spinor Dirac not self-adjoint");
    c.require(odd_for(d, SpinorFiber{s->q() / 2, s->twist}.grading()), name + ": spinor Dirac not odd");
    const SetupPtr forms = make_form_setup(in.model);
    const DiffOp sig = build_signature(forms);
    c.require(verify_identity(adjoint(sig), sig).exact_zero, name + ": form Dirac not self-adjoint");
    c.require(odd_for(sig, form_degree_parity(forms)), name + ": form Dirac not odd");
  }
  int operators = 0;
  auto hermitian = [&](const LatticeOperator& op, const std::string& what) {
    ++operators;
    c.require(max_abs(SparseC(op.matrix - SparseC(op.matrix.adjoint()))) == 0.0, what + " not exactly Hermitian");
  };
  for (int k = 0; k <= 4; ++k) {
    hermitian(lattice_dirac_square(t, k, 16), "D_k^2 k=" + std::to_string(k));
    const SetupPtr p = t.plain(k);
    hermitian(discretize(build_bochner(p), Lattice(p, t.scale, {16, true, {}})), "Bochner k=" + std::to_string(k));
  }
  const SetupPtr flat_forms = make_form_setup(load_model(fixture("flat_t3")).model);
  hermitian(discretize(build_deltaH(flat_forms), Lattice(flat_forms, 1.0, {8, true, {}})), "form Laplacian");
  double worst = 0;
  for (int k = 1; k <= 4; ++k) {
    std::mt19937_64 rng(300 + k);
    std::uniform_real_distribution<double> u(0, 2 * kPi);
    std::vector<cdouble> gauge(64);
    for (auto& z : gauge) z = std::polar(1.0, u(rng));
    const auto base = eigen(lattice_dirac_square(t, k, 8).matrix);
    const auto gauged = eigen(lattice_dirac_square(t, k, 8, true, gauge).matrix);
    for (std::size_t i = 0; i < base.size(); ++i) worst = std::max(worst, std::abs(base[i] - gauged[i]));
  }
  c.require(worst <= 1e-10, "gauge spectrum shift " + fmt(worst));
  if (c.ok) c.detail << "3 fixtures exact; " << operators << " lattice operators Hermitian; gauge shift " << fmt(worst, 3);
  return c;
}

// Single-coefficient corruptions are detected at a specific monomial.
Check criterion8() {
  Check c;
  const std::vector<Mutation> mutations = {{"tau", {1}, QSqrt2(1)}, {"K", {}, QSqrt2(1)}, {"curvature", {1, 2, 0, 1}, QSqrt2(1)}};
  std::ostringstream summary;
  for (const auto& name : kFixtures) {
    const ModelFile f = load_model(fixture(name));
    for (const auto& m : mutations) {
      SuiteInput in = suite_input(f);
      in.mutation = m;
      const SuiteReport r = verify_suite(in);
      std::string where;
      for (const auto& i : r.items) {
        if (i.status != "fail") continue;
        c.require(!i.nonzero.empty() && !i.residual.is_zero(), name + " " + m.target + ": item " + i.label + " fails without residual");
        where += i.label;
        if (m.target == "K") {
          c.require(i.nonzero.size() == 1 && i.nonzero[0].monomial == "1", name + " K: item " + i.label + " residual not at degree 0");
        }
      }
      c.require(!where.empty(), name + " " + m.target + ": corruption not detected");
      c.require(where.size() < r.items.size(), name + " " + m.target + ": every item fails");
      summary << name << "/" << m.target << "->" << where << " ";
    }
  }
  if (c.ok) c.detail << summary.str();
  return c;
}

}  // namespace

int main() {
  const TorusModel landau = TorusModel::from_file(load_model(fixture("t3_landau")));
  std::vector<std::pair<std::string, std::function<Check()>>> criteria;
  std::vector<SpectrumReport> scan;
  double scan_seconds = 0;
  auto run_scan = [&] {
    if (scan.empty()) {
      const auto t0 = std::chrono::steady_clock::now();
      scan = gap_scan(landau, 1, 4, 32);
      scan_seconds = seconds_since(t0);
    }
  };
  criteria.emplace_back("exact identity suite on flat_t3, heisenberg, sol", criterion1);
  criteria.emplace_back("fiber battery, 1000 pairs for q = 2, 4, 6", criterion2);
  criteria.emplace_back("spectral gap within 5% of 4 pi k, N = 32, k = 1..4", [&] {
    run_scan();
    return criterion3(scan, scan_seconds);
  });
  criteria.emplace_back("odd kernel empty, even kernel dimension k", [&] {
    run_scan();
    return criterion4(scan);
  });
  criteria.emplace_back("Bochner ground level minus k lambda >= -0.5", [&] { return criterion5(landau); });
  criteria.emplace_back("lattice cross-validation at N = 8, 20 sections", [&] { return criterion6(landau); });
  criteria.emplace_back("self-adjoint odd Dirac, Hermitian lattice, gauge invariance", [&] { return criterion7(landau); });
  criteria.emplace_back("single-coefficient mutations detected and localized", criterion8);

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "exception: " << e.what();
    }
    failed += !c.ok;
    std::cout << "criterion " << i + 1 << ": " << (c.ok ? "PASS" : "FAIL") << "  " << criteria[i].first << "  [" << c.detail.str() << "]"
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << std::endl;
  return failed == 0 ? 0 : 1;
}
