#pragma once

// JSON model files:
//   { "name": ..., "p": 1, "q": 2,
//     "brackets": [[i, j, k, "c"], ...],          // [u_i, u_j] has u_k-component c; 1-based, leaves first
//     "line_bundle": { "B": [["0", "-i"], ["i", "0"]], "unit": "2pi" },
//     "J": [["0", "-1"], ["1", "0"]],
//     "twist_dim": 1, "k": 1,
//     "mutate": { "target": "K" | "tau" | "curvature" | "div", "index": [...], "delta": "1" } }

#include "tdirac/frame_geometry.hpp"

#include "json.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdirac {

/// Deliberate corruption of one derived geometric coefficient.
struct Mutation {
  std::string target;       // "K", "tau", "curvature", "div"
  std::vector<int> index;   // 0-based after loading
  QSqrt2 delta;
};

struct ModelFile {
  FrameModel model;
  std::optional<ComplexMatrix> line_bundle;  // R^L(f_a, f_b) in units of `flux_unit`
  bool flux_unit_2pi = false;
  std::optional<RealMatrix> J;
  int twist_dim = 1;
  int k = 1;
  std::optional<Mutation> mutation;
  std::string source;

  ComplexStructure complex_structure() const {
    return J ? ComplexStructure::from_matrix(*J) : ComplexStructure::standard_structure(model.q());
  }
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string json_scalar_text(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ModelError(where + ": expected an exact number as integer or string");
}

inline QSqrt2 json_real(const nlohmann::json& v, const std::string& where) {
  try {
    return QSqrt2::parse(json_scalar_text(v, where));
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelError(where + ": " + e.what());
  }
}

inline Scalar json_complex(const nlohmann::json& v, const std::string& where) {
  try {
    return parse_scalar(json_scalar_text(v, where));
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelError(where + ": " + e.what());
  }
}

template <class T, class F>
Matrix<T> json_matrix(const nlohmann::json& v, std::size_t n, const std::string& where, F&& parse) {
  if (!v.is_array() || v.size() != n) throw ModelError(where + ": expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  Matrix<T> m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!v[r].is_array() || v[r].size() != n) throw ModelError(where + ": row " + std::to_string(r + 1) + " has wrong length");
    for (std::size_t c = 0; c < n; ++c)
      m(r, c) = parse(v[r][c], where + "[" + std::to_string(r + 1) + "][" + std::to_string(c + 1) + "]");
  }
  return m;
}

inline int json_int(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ModelError(where + ": missing field '" + key + "'");
  if (!obj[key].is_number_integer()) throw ModelError(where + ": field '" + key + "' must be an integer");
  return obj[key].get<int>();
}

}  // namespace detail

inline ModelFile parse_model(const nlohmann::json& j, const std::string& source = "<memory>") {
  using detail::json_int;
  if (!j.is_object()) throw ModelError(source + ": model must be a JSON object");
  ModelFile out;
  out.source = source;
  const std::string name = j.value("name", std::string("unnamed"));
  const int p = json_int(j, "p", source), q = json_int(j, "q", source);
  if (p < 0 || q < 0 || p + q == 0) throw ModelError(source + ": invalid dimensions p=" + std::to_string(p) + ", q=" + std::to_string(q));
  if (q % 2 != 0) throw ModelError(source + ": codimension must be even (q = " + std::to_string(q) + ")");
  out.model = FrameModel(name, p, q);
  const int n = p + q;

  if (j.contains("brackets")) {
    if (!j["brackets"].is_array()) throw ModelError(source + ": 'brackets' must be an array");
    for (std::size_t t = 0; t < j["brackets"].size(); ++t) {
      const auto& b = j["brackets"][t];
      const std::string where = source + ": brackets[" + std::to_string(t) + "]";
      if (!b.is_array() || b.size() != 4) throw ModelError(where + ": expected [i, j, k, value]");
      int idx[3];
      for (int s = 0; s < 3; ++s) {
        if (!b[s].is_number_integer()) throw ModelError(where + ": indices must be integers");
        idx[s] = b[s].get<int>() - 1;
        if (idx[s] < 0 || idx[s] >= n) throw ModelError(where + ": index out of range 1.." + std::to_string(n));
      }
      const QSqrt2 value = detail::json_real(b[3], where);
      if (idx[0] == idx[1]) throw ModelError(where + ": [u_i, u_i] must vanish");
      const QSqrt2& existing = out.model.c(idx[2], idx[0], idx[1]);
      if (!existing.is_zero() && !(existing == value))
        throw ModelError(where + ": conflicts with an earlier bracket entry");
      out.model.set_bracket(idx[0], idx[1], idx[2], value);
    }
  }

  if (j.contains("line_bundle")) {
    const auto& lb = j["line_bundle"];
    if (!lb.is_object() || !lb.contains("B")) throw ModelError(source + ": line_bundle needs a 'B' matrix");
    out.line_bundle = detail::json_matrix<Scalar>(lb["B"], q, source + ": line_bundle.B", detail::json_complex);
    try {
      TwoForm check(*out.line_bundle);
    } catch (const std::exception& e) {
      throw ModelError(source + ": line_bundle.B: " + e.what());
    }
    const std::string unit = lb.value("unit", std::string("1"));
    if (unit == "2pi") {
      out.flux_unit_2pi = true;
    } else if (unit != "1") {
      throw ModelError(source + ": line_bundle.unit must be \"1\" or \"2pi\"");
    }
  }

  if (j.contains("J")) {
    out.J = detail::json_matrix<QSqrt2>(j["J"], q, source + ": J", detail::json_real);
    try {
      (void)ComplexStructure::from_matrix(*out.J);
    } catch (const std::exception& e) {
      throw ModelError(source + ": J: " + e.what());
    }
  }
  if (j.contains("twist_dim")) {
    out.twist_dim = json_int(j, "twist_dim", source);
    if (out.twist_dim < 1) throw ModelError(source + ": twist_dim must be positive");
  }
  if (j.contains("k")) out.k = json_int(j, "k", source);

  if (j.contains("mutate")) {
    const auto& mu = j["mutate"];
    const std::string where = source + ": mutate";
    if (!mu.is_object() || !mu.contains("target") || !mu.contains("delta")) throw ModelError(where + ": needs 'target' and 'delta'");
    Mutation m;
    m.target = mu["target"].get<std::string>();
    m.delta = detail::json_real(mu["delta"], where + ".delta");
    if (mu.contains("index"))
      for (const auto& v : mu["index"]) m.index.push_back(v.get<int>() - 1);
    std::size_t expected = 0;
    if (m.target == "K") expected = 0;
    else if (m.target == "tau") expected = 1;
    else if (m.target == "div") expected = 1;
    else if (m.target == "curvature") expected = 4;
    else throw ModelError(where + ": unknown target '" + m.target + "'");
    if (m.index.size() != expected) throw ModelError(where + ": target '" + m.target + "' needs " + std::to_string(expected) + " indices");
    out.mutation = m;
  }
  return out;
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(path + ": malformed JSON: " + e.what());
  }
  try {
    return parse_model(j, path);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(path + ": " + e.what());
  }
}

/// Applies a mutation to derived data; indices are validated here.
inline void apply_mutation(ConnectionData& d, const Mutation& m) {
  auto check = [](int i, int bound, const char* what) {
    if (i < 0 || i >= bound) throw ModelError(std::string("mutation index out of range for ") + what);
  };
  if (m.target == "K") {
    d.K += m.delta;
  } else if (m.target == "tau") {
    check(m.index[0], d.q, "tau");
    d.tau[m.index[0]] += m.delta;
  } else if (m.target == "div") {
    check(m.index[0], d.n(), "div");
    d.div[m.index[0]] += m.delta;
  } else if (m.target == "curvature") {
    check(m.index[0], d.n(), "curvature");
    check(m.index[1], d.n(), "curvature");
    check(m.index[2], d.q, "curvature");
    check(m.index[3], d.q, "curvature");
    if (m.index[0] == m.index[1] || m.index[2] == m.index[3])
      throw ModelError("curvature mutation needs distinct index pairs");
    // Kept antisymmetric in both index pairs.
    auto& r = d.curvature[static_cast<std::size_t>(m.index[0]) * d.n() + m.index[1]];
    auto& rt = d.curvature[static_cast<std::size_t>(m.index[1]) * d.n() + m.index[0]];
    r(m.index[2], m.index[3]) += m.delta;
    r(m.index[3], m.index[2]) -= m.delta;
    rt(m.index[2], m.index[3]) -= m.delta;
    rt(m.index[3], m.index[2]) += m.delta;
  } else {
    throw ModelError("unknown mutation target '" + m.target + "'");
  }
}

}  // namespace tdirac
