#pragma once

#include <Eigen/Dense>

#include "vpsim/common.hpp"

namespace vpsim {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

// Metric signature (+,-,-,-).
inline double metric_sign(int mu) { return mu == 0 ? 1.0 : -1.0; }

// Dirac representation: gamma0 = diag(1,1,-1,-1), gamma^i off-diagonal in
// the Pauli matrices. Entries are exactly 0, +-1, +-i.
struct GammaSet {
  Mat4 gamma[4];

  const Mat4& operator[](int mu) const { return gamma[mu]; }

  // alpha^k = gamma^0 gamma^k for spatial k in {1,2,3}
  Mat4 alpha(int k) const { return gamma[0] * gamma[k]; }
};

inline GammaSet build_gamma_set() {
  GammaSet g;
  Eigen::Matrix2cd sigma[3];
  sigma[0] << 0, 1, 1, 0;
  sigma[1] << 0, -I, I, 0;
  sigma[2] << 1, 0, 0, -1;

  g.gamma[0].setZero();
  g.gamma[0](0, 0) = 1;
  g.gamma[0](1, 1) = 1;
  g.gamma[0](2, 2) = -1;
  g.gamma[0](3, 3) = -1;

  for (int i = 0; i < 3; ++i) {
    g.gamma[i + 1].setZero();
    g.gamma[i + 1].block<2, 2>(0, 2) = sigma[i];
    g.gamma[i + 1].block<2, 2>(2, 0) = -sigma[i];
  }
  return g;
}

}  // namespace vpsim
