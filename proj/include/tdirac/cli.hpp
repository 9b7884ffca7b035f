#pragma once

// Command-line front end: verify, gap, fiber, crosscheck.
// Exit codes: 0 pass, 1 mathematical violation, 2 invalid input, 3 numerical failure.

#include "tdirac/spectral.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace tdirac::cli {

enum ExitCode : int { kPass = 0, kViolation = 1, kInvalidInput = 2, kNumericalFailure = 3 };

struct RunConfig {
  std::string command;
  std::string model;
  int k_min = 1, k_max = 1;
  int N = 16;
  int trials = 100;
  std::uint64_t seed = 1;
  double tol = 0.05;
  std::string format = "json";
  std::string out;
  bool strict = false;
  bool timing = true;
  int q = 2;
};

struct Outcome {
  int code = kPass;
  std::string report;                  // written to --out or stdout
  std::vector<std::string> messages;   // diagnostics for stderr
};

using ordered_json = nlohmann::ordered_json;

/// Parses "A..B" or "A".
inline std::pair<int, int> parse_k_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int k = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument("");
      return {k, k};
    }
    const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
    const int lo = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument("");
    const int hi = std::stoi(b, &used);
    if (used != b.size()) throw std::invalid_argument("");
    return {lo, hi};
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid k range '" + s + "' (expected A..B)");
  }
}

inline void check_config(const RunConfig& c) {
  if (c.k_min > c.k_max) throw std::invalid_argument("k range is empty: k_min must not exceed k_max");
  if (c.k_min < 0) throw std::invalid_argument("k must be nonnegative");
  if (c.N < 4 || c.N % 2 != 0) throw std::invalid_argument("N must be even and at least 4");
  if (c.trials < 0) throw std::invalid_argument("trials must be nonnegative");
  if (!(c.tol >= 0 && c.tol < 1)) throw std::invalid_argument("tol must lie in [0, 1)");
  if (c.format != "json" && c.format != "csv") throw std::invalid_argument("format must be csv or json");
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

// ---------------------------------------------------------------------------

inline Outcome cmd_verify(const RunConfig& c) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ModelFile f = load_model(c.model);
  require_valid(f.model);
  const SuiteReport rep = verify_suite(suite_input(f));
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  bool ok = rep.all_pass();
  if (c.strict)
    for (const auto& i : rep.items)
      if (i.status == "reported" && !i.exact_zero) ok = false;
  o.code = ok ? kPass : kViolation;
  for (const auto& w : rep.warnings) o.messages.push_back("warning: " + w);

  if (c.format == "csv") {
    std::ostringstream os;
    os << "label,status,exact_zero,residual,residual_exact,note\n";
    for (const auto& i : rep.items)
      os << i.label << ',' << i.status << ',' << (i.exact_zero ? "true" : "false") << ',' << fmt(i.residual_decimal())
         << ',' << csv_field(i.residual.to_string()) << ',' << csv_field(i.note) << '\n';
    o.report = os.str();
  } else {
    ordered_json j;
    j["command"] = "verify";
    j["model"] = rep.model;
    j["passed"] = rep.passed_count();
    j["identities"] = ordered_json::array();
    for (const auto& i : rep.items) {
      ordered_json e;
      e["label"] = i.label;
      e["anchor"] = i.anchor;
      e["status"] = i.status;
      e["exact_zero"] = i.exact_zero;
      e["residual"] = fmt(i.residual_decimal());
      e["residual_exact"] = i.residual.to_string();
      if (!i.note.empty()) e["note"] = i.note;
      if (!i.nonzero.empty()) {
        e["nonzero_monomials"] = ordered_json::array();
        for (const auto& m : i.nonzero) e["nonzero_monomials"].push_back({{"monomial", m.monomial}, {"residual", m.residual.to_string()}});
      }
      j["identities"].push_back(e);
    }
    j["warnings"] = rep.warnings;
    j["result"] = ok ? "pass" : "violation";
    if (c.timing) j["runtime_ms"] = ms;
    o.report = j.dump(2) + "\n";
  }
  std::ostringstream summary;
  summary << rep.model << ": " << rep.passed_count() << " identities pass";
  for (const auto& i : rep.items)
    if (i.status == "fail") summary << "; " << i.label << " fails (residual " << i.residual.to_string() << ")";
  o.messages.push_back(summary.str());
  return o;
}

inline Outcome cmd_gap(const RunConfig& c) {
  Outcome o;
  const TorusModel t = TorusModel::from_file(load_model(c.model));
  if (c.N < 8) o.messages.push_back("warning: grid below resolution heuristic (N = " + std::to_string(c.N) + " < 8)");
  const auto reps = gap_scan(t, c.k_min, c.k_max, c.N);
  const double C = fitted_C(reps);
  bool ok = true;
  std::vector<std::string> notes;
  for (const auto& r : reps) {
    if (r.k == 0) {
      notes.push_back("k = 0: kernel_odd = " + std::to_string(r.kernel_dim_odd) + "; vanishing asserted only for large k");
      continue;
    }
    if (r.kernel_dim_odd != 0) {
      ok = false;
      notes.push_back("k = " + std::to_string(r.k) + ": odd kernel has dimension " + std::to_string(r.kernel_dim_odd));
    }
    if (r.gap < r.two_km * (1 - c.tol)) {
      ok = false;
      notes.push_back("k = " + std::to_string(r.k) + ": gap " + fmt(r.gap) + " below 2km (1 - tol) = " + fmt(r.two_km * (1 - c.tol)));
    }
    if (r.ambiguous) notes.push_back("k = " + std::to_string(r.k) + ": " + r.note);
  }
  o.code = ok ? kPass : kViolation;
  for (const auto& n : notes) o.messages.push_back("note: " + n);

  if (c.format == "csv") {
    std::ostringstream os;
    os << "k,N,gap,2km,fitted_C,kernel_odd,kernel_even,runtime_ms\n";
    for (const auto& r : reps)
      os << r.k << ',' << r.N << ',' << fmt(r.gap) << ',' << fmt(r.two_km) << ',' << fmt(C) << ',' << r.kernel_dim_odd << ','
         << r.kernel_dim_even << ',' << (c.timing ? fmt(r.runtime_ms) : std::string()) << '\n';
    o.report = os.str();
  } else {
    ordered_json j;
    j["command"] = "gap";
    j["model"] = t.model.name();
    j["N"] = c.N;
    j["k_min"] = c.k_min;
    j["k_max"] = c.k_max;
    j["tol"] = c.tol;
    j["m"] = t.m();
    j["lambda"] = t.lambda();
    j["fitted_C"] = C;
    j["rows"] = ordered_json::array();
    for (const auto& r : reps) {
      ordered_json e;
      e["k"] = r.k;
      e["N"] = r.N;
      e["gap"] = r.gap;
      e["2km"] = r.two_km;
      e["fitted_C"] = C;
      e["kernel_odd"] = r.kernel_dim_odd;
      e["kernel_even"] = r.kernel_dim_even;
      e["min_eigenvalue"] = r.min_eigenvalue;
      e["threshold"] = r.threshold;
      e["plaquette_phase"] = {r.plaquette_phase.real(), r.plaquette_phase.imag()};
      e["lowest_eigenvalues"] = std::vector<double>(r.eigenvalues.begin(), r.eigenvalues.begin() + std::min<std::size_t>(r.eigenvalues.size(), 12));
      if (c.timing) e["runtime_ms"] = r.runtime_ms;
      j["rows"].push_back(e);
    }
    j["notes"] = notes;
    j["result"] = ok ? "pass" : "violation";
    o.report = j.dump(2) + "\n";
  }
  return o;
}

inline Outcome cmd_fiber(const RunConfig& c) {
  Outcome o;
  if (c.q % 2 != 0) throw std::invalid_argument("codimension must be even (q = " + std::to_string(c.q) + ")");
  if (c.q < 2 || c.q > 12) throw std::invalid_argument("q must lie in 2..12");
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(c.seed);
  int passed = 0;
  QSqrt2 min_margin;
  bool have_margin = false;
  ordered_json violations = ordered_json::array();
  for (int t = 0; t < c.trials; ++t) {
    const CompatiblePair pair = random_compatible_pair(c.q, rng);
    const QSqrt2 residual = check_rl1(pair.b, pair.j);
    const OddBound bound = odd_lower_bound(pair.b, pair.j);
    const bool ok = residual.is_zero() && bound.exact && bound.holds;
    if (bound.exact && (!have_margin || bound.margin < min_margin)) {
      min_margin = bound.margin;
      have_margin = true;
    }
    if (ok) {
      ++passed;
    } else {
      violations.push_back({{"trial", t},
                            {"B", matrix_to_string(pair.b.matrix())},
                            {"J", matrix_to_string(pair.j.matrix())},
                            {"lowest_weight_residual", residual.to_string()},
                            {"bound_exact", bound.exact},
                            {"margin", bound.exact ? bound.margin.to_string() : fmt(bound.min_eigenvalue)}});
    }
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  o.code = passed == c.trials ? kPass : kViolation;
  if (c.trials == 0) o.messages.push_back("note: zero trials requested; nothing checked");

  if (c.format == "csv") {
    std::ostringstream os;
    os << "q,trials,passed,violations,min_margin,runtime_ms\n";
    os << c.q << ',' << c.trials << ',' << passed << ',' << (c.trials - passed) << ','
       << csv_field(have_margin ? min_margin.to_string() : std::string()) << ',' << (c.timing ? fmt(ms) : std::string()) << '\n';
    o.report = os.str();
  } else {
    ordered_json j;
    j["command"] = "fiber";
    j["q"] = c.q;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["passed"] = passed;
    if (have_margin) j["min_margin"] = min_margin.to_string();
    j["violations"] = violations;
    j["result"] = o.code == kPass ? "pass" : "violation";
    if (c.timing) j["runtime_ms"] = ms;
    o.report = j.dump(2) + "\n";
  }
  if (o.code != kPass) o.messages.push_back(std::to_string(c.trials - passed) + " trial(s) violate the fiber identities");
  return o;
}

inline Outcome cmd_crosscheck(const RunConfig& c) {
  Outcome o;
  const ModelFile f = load_model(c.model);
  const TorusModel t = TorusModel::from_file(f);
  const SuiteOperators ops = suite_operators(suite_input(f));
  const double limit = c.strict ? 0.0 : 1e-8;
  struct Row {
    std::string label, status;
    double residual = 0;
  };
  std::vector<Row> rows;
  bool ok = true;
  for (const auto& p : ops.pairs) {
    Row r{p.label, "", 0};
    if (!p.skip_reason.empty()) {
      r.status = "skipped";
    } else {
      const Lattice lat(p.lhs->setup(), t.scale, {c.N, true, {}});
      r.residual = cross_validate(*p.lhs, *p.rhs, lat, c.trials, c.seed);
      if (p.reported) {
        r.status = "reported";
      } else {
        r.status = r.residual <= limit ? "pass" : "fail";
        if (r.status == "fail") ok = false;
      }
    }
    rows.push_back(r);
  }
  o.code = ok ? kPass : kViolation;
  if (c.trials == 0) o.messages.push_back("note: zero trials requested; nothing checked");
  if (c.trials == 1) o.messages.push_back("note: single random section per identity");

  if (c.format == "csv") {
    std::ostringstream os;
    os << "label,status,relative_residual\n";
    for (const auto& r : rows) os << r.label << ',' << r.status << ',' << fmt(r.residual) << '\n';
    o.report = os.str();
  } else {
    ordered_json j;
    j["command"] = "crosscheck";
    j["model"] = t.model.name();
    j["N"] = c.N;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["limit"] = limit;
    j["identities"] = ordered_json::array();
    for (const auto& r : rows) j["identities"].push_back({{"label", r.label}, {"status", r.status}, {"relative_residual", r.residual}});
    j["result"] = ok ? "pass" : "violation";
    o.report = j.dump(2) + "\n";
  }
  if (!ok) {
    std::ostringstream os;
    os << "cross-validation residuals:";
    for (const auto& r : rows)
      if (r.status == "fail") os << "\n  " << r.label << "  " << fmt(r.residual);
    o.messages.push_back(os.str());
  }
  return o;
}

inline Outcome dispatch(const RunConfig& c) {
  check_config(c);
  if (c.command == "verify") return cmd_verify(c);
  if (c.command == "gap") return cmd_gap(c);
  if (c.command == "fiber") return cmd_fiber(c);
  if (c.command == "crosscheck") return cmd_crosscheck(c);
  throw std::invalid_argument("unknown command '" + c.command + "'");
}

/// Writes through a temporary file in the target directory, then renames.
inline void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write output file '" + path + "'");
    out << content;
    if (!out) throw std::invalid_argument("cannot write output file '" + path + "'");
  }
  fs::rename(tmp, target);
}

/// Runs one command; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transverse Dirac operator verification on homogeneous foliated models"};
  app.require_subcommand(1);
  RunConfig c;
  std::string krange;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--format", c.format, "Report format: csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", c.out, "Write the report to this file");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_flag("--strict", c.strict, "Exact-only verdicts");
    sub->add_flag("!--no-timing", c.timing, "Omit runtimes for byte-identical reports");
  };
  auto* verify = app.add_subcommand("verify", "Run the exact operator identity suite");
  verify->add_option("--model", c.model, "Model file")->required();
  common(verify);
  auto* gap = app.add_subcommand("gap", "Spectral gap and odd kernel scan on a flat torus");
  gap->add_option("--model", c.model, "Model file")->required();
  gap->add_option("--k", krange, "Tensor powers A..B");
  gap->add_option("--N", c.N, "Grid points per transverse direction");
  gap->add_option("--tol", c.tol, "Relative gap tolerance");
  common(gap);
  auto* fiber = app.add_subcommand("fiber", "Random battery of fiberwise curvature identities");
  fiber->add_option("--q", c.q, "Codimension");
  fiber->add_option("--trials", c.trials, "Number of random (B, J) pairs");
  common(fiber);
  auto* cross = app.add_subcommand("crosscheck", "Lattice cross-validation of the identity suite");
  cross->add_option("--model", c.model, "Model file")->required();
  cross->add_option("--N", c.N, "Grid points per transverse direction");
  cross->add_option("--trials", c.trials, "Random sections per identity");
  common(cross);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kInvalidInput;
  }
  c.command = app.get_subcommands().front()->get_name();
  if (c.command == "crosscheck" && cross->count("--trials") == 0) c.trials = 20;
  if (c.command == "crosscheck" && cross->count("--N") == 0) c.N = 8;

  Outcome o;
  try {
    if (!krange.empty()) std::tie(c.k_min, c.k_max) = parse_k_range(krange);
    o = dispatch(c);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  for (const auto& m : o.messages) err << m << '\n';
  try {
    if (c.out.empty()) {
      out << o.report;
    } else {
      write_atomically(c.out, o.report);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return o.code;
}

}  // namespace tdirac::cli
