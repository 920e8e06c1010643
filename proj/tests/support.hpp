#pragma once

// Shared helpers for the test suites: lattice plane waves built from the
// 4x4 symbol of the free Hamiltonian (the independent oracle for spectra),
// and seeded random fields.

#include <vpsim/dirac.hpp>
#include <vpsim/field.hpp>

namespace testsup {

using namespace vpsim;

// Lattice momentum of integer mode k on a periodic x axis.
inline double lattice_momentum(const SpacetimeGrid& g, int k) {
  double p = 2.0 * PI * k / (g.n_x * g.dx);
  return std::sin(p * g.dx) / g.dx;
}

inline double continuum_momentum(const SpacetimeGrid& g, int k) {
  return 2.0 * PI * k / (g.n_x * g.dx);
}

// Exact eigenspinors of H_sym = p alpha^1 + m gamma^0 (free case).
inline Vec4 plane_spinor(double p_eff, double m, int sign) {
  double e = std::sqrt(m * m + p_eff * p_eff);
  Vec4 u;
  if (sign > 0)
    u << 1.0, 0.0, 0.0, p_eff / (e + m);
  else
    u << -p_eff / (e + m), 0.0, 0.0, 1.0;
  u /= u.norm();
  return u;
}

inline double plane_energy(const SpacetimeGrid& g, int k, double m, int sign) {
  double pt = lattice_momentum(g, k);
  return sign * std::sqrt(m * m + pt * pt);
}

// psi(t, x) = u exp(i p x - i E t); with use_lattice_p the spinor and energy
// are built from the lattice momentum so H psi = E psi holds to round-off.
inline SpinorField plane_wave(const SpacetimeGrid& g, int k, int sign, double m,
                              bool use_lattice_p = true) {
  double p = continuum_momentum(g, k);
  double p_eff = use_lattice_p ? lattice_momentum(g, k) : p;
  double e = sign * std::sqrt(m * m + p_eff * p_eff);
  Vec4 u = plane_spinor(p_eff, m, sign);
  SpinorField f(g);
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i)
      f.spinor(s, i) =
          u * std::exp(I * (p * g.x_at(i) - e * g.time_at(s)));
  return f;
}

inline SpinorSlice plane_wave_slice(const SpacetimeGrid& g, int k, int sign,
                                    double m) {
  double p = continuum_momentum(g, k);
  double p_eff = lattice_momentum(g, k);
  Vec4 u = plane_spinor(p_eff, m, sign);
  SpinorSlice sl(g, 0);
  for (int i = 0; i < g.n_x; ++i)
    sl.spinor(i) = u * std::exp(I * p * g.x_at(i));
  return sl;
}

inline SpinorField random_field(const SpacetimeGrid& g, Rng& rng) {
  SpinorField f(g);
  for (auto& v : f.values) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return f;
}

inline SpinorSlice random_slice(const SpacetimeGrid& g, Rng& rng, int t = 0) {
  SpinorSlice sl(g, t);
  for (auto& v : sl.values) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return sl;
}

inline cplx dot4(const SpinorField& a, const SpinorField& b) {
  cplx acc(0, 0);
  for (size_t i = 0; i < a.values.size(); ++i)
    acc += std::conj(a.values[i]) * b.values[i];
  return acc;
}

inline double max_abs(const SpinorField& f) {
  double w = 0;
  for (const auto& v : f.values) w = std::max(w, std::abs(v));
  return w;
}

inline SpacetimeGrid small_grid(int n_t = 16, int n_x = 16, double dt = 0.05,
                                double dx = 0.2) {
  SpacetimeGrid g;
  g.n_t = n_t;
  g.n_x = n_x;
  g.dt = dt;
  g.dx = dx;
  return g;
}

}  // namespace testsup
