#include "tdirac/model_io.hpp"
#include "test_models.hpp"

#include <gtest/gtest.h>

using namespace tdirac;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(TDIRAC_MODEL_DIR) + "/" + name + ".json"; }

void expect_same_constants(const FrameModel& a, const FrameModel& b) {
  ASSERT_EQ(a.p(), b.p());
  ASSERT_EQ(a.q(), b.q());
  for (int k = 0; k < a.n(); ++k)
    for (int i = 0; i < a.n(); ++i)
      for (int j = 0; j < a.n(); ++j) EXPECT_EQ(a.c(k, i, j), b.c(k, i, j)) << a.name() << " " << k << i << j;
}

json base() { return json::parse(R"({"name": "t", "p": 1, "q": 2})"); }

std::string error_of(const json& j) {
  try {
    parse_model(j);
  } catch (const ModelError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ModelFiles, FixturesMatchConstructedModels) {
  expect_same_constants(load_model(fixture("flat_t3")).model, testmodels::flat_t3());
  expect_same_constants(load_model(fixture("heisenberg")).model, testmodels::heisenberg());
  expect_same_constants(load_model(fixture("sol")).model, testmodels::sol());
  expect_same_constants(load_model(fixture("bad_bundlelike")).model, testmodels::bad_bundlelike());
}

TEST(ModelFiles, BundledFixturesValidate) {
  for (const char* name : {"flat_t3", "heisenberg", "sol", "t3_landau", "t3_landau_mutated"}) {
    const auto f = load_model(fixture(name));
    EXPECT_TRUE(validate(f.model).ok) << name;
    EXPECT_TRUE(f.line_bundle.has_value()) << name;
    const auto j = f.complex_structure();
    EXPECT_EQ(j.matrix(), ComplexStructure::standard(2)) << name;
  }
  EXPECT_FALSE(validate(load_model(fixture("bad_bundlelike")).model).ok);
}

TEST(ModelFiles, LineBundleAndUnits) {
  const auto f = load_model(fixture("t3_landau"));
  EXPECT_TRUE(f.flux_unit_2pi);
  EXPECT_EQ((*f.line_bundle)(0, 1), Scalar(QSqrt2(), QSqrt2(-1)));
  EXPECT_FALSE(load_model(fixture("flat_t3")).flux_unit_2pi);
  const auto m = load_model(fixture("t3_landau_mutated"));
  ASSERT_TRUE(m.mutation.has_value());
  EXPECT_EQ(m.mutation->target, "K");
  EXPECT_EQ(m.mutation->delta, QSqrt2(1));
}

TEST(ModelFiles, Errors) {
  EXPECT_THROW(load_model(fixture("missing")), ModelError);

  json odd = base();
  odd["q"] = 3;
  EXPECT_NE(error_of(odd).find("codimension must be even"), std::string::npos);

  json idx = base();
  idx["brackets"] = json::parse(R"([[1, 4, 2, "1"]])");
  EXPECT_NE(error_of(idx).find("out of range"), std::string::npos);

  json conflict = base();
  conflict["brackets"] = json::parse(R"([[2, 3, 1, "1"], [3, 2, 1, "1"]])");
  EXPECT_NE(error_of(conflict).find("conflicts"), std::string::npos);

  json consistent = base();
  consistent["brackets"] = json::parse(R"([[2, 3, 1, "1"], [3, 2, 1, "-1"]])");
  EXPECT_EQ(error_of(consistent), "");

  json badnum = base();
  badnum["brackets"] = json::parse(R"([[2, 3, 1, "x"]])");
  EXPECT_NE(error_of(badnum).find("brackets[0]"), std::string::npos);

  json floatnum = base();
  floatnum["brackets"] = json::parse(R"([[2, 3, 1, 0.5]])");
  EXPECT_NE(error_of(floatnum).find("exact number"), std::string::npos);

  json skew = base();
  skew["line_bundle"] = json::parse(R"({"B": [["0", "-i"], ["-i", "0"]]})");
  EXPECT_NE(error_of(skew).find("skew"), std::string::npos);

  json realb = base();
  realb["line_bundle"] = json::parse(R"({"B": [["0", "1"], ["-1", "0"]]})");
  EXPECT_NE(error_of(realb).find("imaginary"), std::string::npos);

  json unit = base();
  unit["line_bundle"] = json::parse(R"({"B": [["0", "-i"], ["i", "0"]], "unit": "pi"})");
  EXPECT_NE(error_of(unit).find("unit"), std::string::npos);

  json badj = base();
  badj["J"] = json::parse(R"([["1", "0"], ["0", "1"]])");
  EXPECT_NE(error_of(badj).find("J"), std::string::npos);

  json mut = base();
  mut["mutate"] = json::parse(R"({"target": "torsion", "delta": "1"})");
  EXPECT_NE(error_of(mut).find("unknown target"), std::string::npos);

  json mutidx = base();
  mutidx["mutate"] = json::parse(R"({"target": "tau", "delta": "1"})");
  EXPECT_NE(error_of(mutidx).find("needs 1"), std::string::npos);
}

TEST(ModelFiles, SqrtTwoEntries) {
  json j = base();
  j["brackets"] = json::parse(R"([[2, 3, 1, "1/2+1/2√2"]])");
  const auto f = parse_model(j);
  EXPECT_EQ(f.model.c(0, 1, 2), QSqrt2(Rational(1, 2), Rational(1, 2)));
}

TEST(Mutation, AppliesToSingleCoefficient) {
  const auto m = testmodels::sol();
  const auto d0 = derive(m);
  auto d = d0;
  apply_mutation(d, {"tau", {1}, QSqrt2(3)});
  EXPECT_EQ(d.tau[1], QSqrt2(3));
  EXPECT_EQ(d.tau[0], d0.tau[0]);
  apply_mutation(d, {"K", {}, QSqrt2(1)});
  EXPECT_EQ(d.K, d0.K + QSqrt2(1));
  apply_mutation(d, {"curvature", {1, 2, 0, 1}, QSqrt2(1)});
  EXPECT_EQ(d.R(1, 2)(0, 1), d0.R(1, 2)(0, 1) + QSqrt2(1));
  EXPECT_EQ(d.R(1, 2)(1, 0), d0.R(1, 2)(1, 0) - QSqrt2(1));
  EXPECT_EQ(d.R(2, 1)(0, 1), d0.R(2, 1)(0, 1) - QSqrt2(1));
  EXPECT_THROW(apply_mutation(d, {"curvature", {1, 1, 0, 1}, QSqrt2(1)}), ModelError);
  EXPECT_THROW(apply_mutation(d, {"tau", {5}, QSqrt2(1)}), ModelError);
}
