#pragma once

#include "vpsim/field.hpp"
#include "vpsim/potential.hpp"

namespace vpsim {

// D = pislash/m - 1 with pi^0 = i d_t - eA^0 and pi^k = -i d_k - eA^k.
// Using gamma^mu pi_mu = gamma^0 pi^0 - sum_k gamma^k pi^k this reduces to
//
//   D psi = L psi + (i/m) gamma^0 (d_t psi) + (i/m) gamma^1 (d_x psi),
//   L     = -1 - (e/m) A^0 gamma^0 + (e/m) (A^1 gamma^1 + A^2 gamma^2 + A^3 gamma^3),
//
// equivalently D = (gamma^0/m)(i d_t - H). Only the x axis carries
// derivatives; y and z enter through the potential terms alone.
//
// Stencils: centered second-order differences on interior sites, first-order
// one-sided at region boundaries (time axis always bounded; space axis
// bounded only for XBoundary::open).

struct StencilTerm {
  int index;
  double coeff;
};

struct Stencil {
  StencilTerm term[2];
};

inline Stencil bounded_stencil(int i, int n, double h) {
  if (i == 0) return {{{1, 1.0 / h}, {0, -1.0 / h}}};
  if (i == n - 1) return {{{n - 1, 1.0 / h}, {n - 2, -1.0 / h}}};
  return {{{i + 1, 0.5 / h}, {i - 1, -0.5 / h}}};
}

inline Stencil space_stencil(int i, const SpacetimeGrid& g) {
  if (g.x_boundary == XBoundary::open) return bounded_stencil(i, g.n_x, g.dx);
  int up = (i + 1) % g.n_x;
  int dn = (i + g.n_x - 1) % g.n_x;
  return {{{up, 0.5 / g.dx}, {dn, -0.5 / g.dx}}};
}

inline Stencil time_stencil(int s, const SpacetimeGrid& g) {
  return bounded_stencil(s, g.n_t, g.dt);
}

inline void check_stencil_size(const SpacetimeGrid& g) {
  require(g.n_t >= 3 && g.n_x >= 3,
          "grid too small for stencil (need >= 3 sites along each active axis)");
}

// Local (derivative-free) part of D at one site.
inline Mat4 dirac_local_matrix(const GammaSet& gm, const Potential& pot,
                               const SpacetimeGrid& g, double m, int s, int i) {
  Mat4 L = -Mat4::Identity();
  if (!pot.trivial()) {
    const double em = pot.charge / m;
    L -= em * pot.at(0, g, s, i) * gm[0];
    for (int k = 1; k < 4; ++k) L += em * pot.at(k, g, s, i) * gm[k];
  }
  return L;
}

inline SpinorField apply_dirac(const SpinorField& psi, const Potential& pot,
                               const MassParameter& mass) {
  const SpacetimeGrid& g = psi.grid;
  check_stencil_size(g);
  static const GammaSet gm = build_gamma_set();
  const double m = mass.m;
  const Mat4 ig0 = (I / m) * gm[0];
  const Mat4 ig1 = (I / m) * gm[1];

  SpinorField out(g);
  for (int s = 0; s < g.n_t; ++s) {
    const Stencil st = time_stencil(s, g);
    for (int i = 0; i < g.n_x; ++i) {
      const Stencil sx = space_stencil(i, g);
      Vec4 acc = dirac_local_matrix(gm, pot, g, m, s, i) * psi.spinor(s, i);
      for (const auto& t : st.term)
        acc += t.coeff * (ig0 * psi.spinor(t.index, i));
      for (const auto& t : sx.term)
        acc += t.coeff * (ig1 * psi.spinor(s, t.index));
      out.spinor(s, i) = acc;
    }
  }
  return out;
}

// Exact adjoint of the discrete map above under the plain site dot product
// (uniform cell volumes cancel). Needed for analytic action gradients.
inline SpinorField apply_dirac_adjoint(const SpinorField& phi, const Potential& pot,
                                       const MassParameter& mass) {
  const SpacetimeGrid& g = phi.grid;
  check_stencil_size(g);
  static const GammaSet gm = build_gamma_set();
  const double m = mass.m;
  // (c * i gamma^0 / m)^dag = -c i gamma^0 / m ; (c * i gamma^1 / m)^dag = +c i gamma^1 / m
  const Mat4 ig0 = (I / m) * gm[0];
  const Mat4 ig1 = (I / m) * gm[1];

  SpinorField out(g);
  for (int s = 0; s < g.n_t; ++s) {
    const Stencil st = time_stencil(s, g);
    for (int i = 0; i < g.n_x; ++i) {
      const Stencil sx = space_stencil(i, g);
      const Vec4 v = phi.spinor(s, i);
      out.spinor(s, i) +=
          dirac_local_matrix(gm, pot, g, m, s, i).adjoint() * v;
      for (const auto& t : st.term)
        out.spinor(t.index, i) += -t.coeff * (ig0 * v);
      for (const auto& t : sx.term)
        out.spinor(s, t.index) += t.coeff * (ig1 * v);
    }
  }
  return out;
}

// H = gamma^0 (gamma . pi + m) + eA^0, applied on one fixed-time slice.
// Hermitian as a discrete operator on periodic grids.
inline SpinorSlice apply_hamiltonian(const SpinorSlice& sl, const Potential& pot,
                                     const MassParameter& mass) {
  const SpacetimeGrid& g = sl.grid;
  require(g.n_x >= 3, "grid too small for stencil (need >= 3 sites along x)");
  static const GammaSet gm = build_gamma_set();
  const double m = mass.m;
  const Mat4 a1 = gm.alpha(1), a2 = gm.alpha(2), a3 = gm.alpha(3);
  const int s = sl.t_index;
  const double e = pot.charge;

  SpinorSlice out(g, s);
  for (int i = 0; i < g.n_x; ++i) {
    const Stencil sx = space_stencil(i, g);
    Vec4 acc = m * (gm[0] * sl.spinor(i));
    if (!pot.trivial()) {
      acc += e * pot.at(0, g, s, i) * sl.spinor(i);
      acc -= e * pot.at(1, g, s, i) * (a1 * sl.spinor(i));
      acc -= e * pot.at(2, g, s, i) * (a2 * sl.spinor(i));
      acc -= e * pot.at(3, g, s, i) * (a3 * sl.spinor(i));
    }
    for (const auto& t : sx.term)
      acc += (-I) * t.coeff * (a1 * sl.spinor(t.index));
    out.spinor(i) = acc;
  }
  return out;
}

// Dense matrix of the slice Hamiltonian in the (x, component) basis,
// ordered as SpinorSlice storage. Used by eigensolves and propagation.
inline Eigen::MatrixXcd hamiltonian_matrix(const SpacetimeGrid& g,
                                           const Potential& pot,
                                           const MassParameter& mass,
                                           int t_index) {
  require(g.n_x >= 3, "grid too small for stencil (need >= 3 sites along x)");
  static const GammaSet gm = build_gamma_set();
  const double m = mass.m;
  const Mat4 a1 = gm.alpha(1), a2 = gm.alpha(2), a3 = gm.alpha(3);
  const double e = pot.charge;
  const int n = g.n_x;

  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(4 * n, 4 * n);
  for (int i = 0; i < n; ++i) {
    Mat4 local = m * gm[0];
    if (!pot.trivial()) {
      local += e * pot.at(0, g, t_index, i) * Mat4::Identity();
      local -= e * pot.at(1, g, t_index, i) * a1;
      local -= e * pot.at(2, g, t_index, i) * a2;
      local -= e * pot.at(3, g, t_index, i) * a3;
    }
    H.block<4, 4>(4 * i, 4 * i) += local;
    const Stencil sx = space_stencil(i, g);
    for (const auto& t : sx.term)
      H.block<4, 4>(4 * i, 4 * t.index) += (-I) * t.coeff * a1;
  }
  return H;
}

}  // namespace vpsim
