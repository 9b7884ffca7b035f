#pragma once

// Frame models built directly in code, independent of the JSON loader.

#include "tdirac/frame_geometry.hpp"

namespace testmodels {

using tdirac::FrameModel;
using tdirac::QSqrt2;

inline FrameModel flat_t3() { return FrameModel("flat_t3", 1, 2); }

/// e1 leaf, [f1, f2] = e1.
inline FrameModel heisenberg() {
  FrameModel m("heisenberg", 1, 2);
  m.set_bracket(1, 2, 0, QSqrt2(1));
  return m;
}

/// [f1, e1] = e1, [f1, f2] = -f2.
inline FrameModel sol() {
  FrameModel m("sol", 1, 2);
  m.set_bracket(1, 0, 0, QSqrt2(1));
  m.set_bracket(1, 2, 2, QSqrt2(-1));
  return m;
}

/// The leaf rotates the transverse plane: [e1, f1] = f2, [e1, f2] = -f1.
inline FrameModel leaf_rotation() {
  FrameModel m("leaf_rotation", 1, 2);
  m.set_bracket(0, 1, 2, QSqrt2(1));
  m.set_bracket(0, 2, 1, QSqrt2(-1));
  return m;
}

/// Two Heisenberg planes sharing one leaf direction: [f1, f2] = e1, [f3, f4] = 2 e1.
inline FrameModel heisenberg5() {
  FrameModel m("heisenberg5", 1, 4);
  m.set_bracket(1, 2, 0, QSqrt2(1));
  m.set_bracket(3, 4, 0, QSqrt2(2));
  return m;
}

/// Leaf rotation mixing f1 with f3, not preserving the standard J on q = 4.
inline FrameModel skew_rotation4() {
  FrameModel m("skew_rotation4", 1, 4);
  m.set_bracket(0, 1, 3, QSqrt2(1));
  m.set_bracket(0, 3, 1, QSqrt2(-1));
  return m;
}

/// [e1, f1] = f2 only.
inline FrameModel bad_bundlelike() {
  FrameModel m("bad_bundlelike", 1, 2);
  m.set_bracket(0, 1, 2, QSqrt2(1));
  return m;
}

/// Two-leaf Sol variant: [f1, e1] = e1, [f1, e2] = -e2/2, [f1, f2] = -f2/2.
inline FrameModel sol2() {
  FrameModel m("sol2", 2, 2);
  m.set_bracket(2, 0, 0, QSqrt2(1));
  m.set_bracket(2, 1, 1, QSqrt2(tdirac::Rational(-1, 2)));
  m.set_bracket(2, 3, 3, QSqrt2(tdirac::Rational(-1, 2)));
  return m;
}

inline std::vector<FrameModel> valid_models() {
  return {flat_t3(), heisenberg(), sol(), leaf_rotation(), heisenberg5(), skew_rotation4(), sol2()};
}

}  // namespace testmodels
