#pragma once

#include <cstdio>
#include <cstring>
#include <functional>

#include "vpsim/gamma.hpp"
#include "vpsim/grid.hpp"

namespace vpsim {

// Fixed-time restriction of a field: one 4-spinor per x site.
struct SpinorSlice {
  SpacetimeGrid grid;
  int t_index = 0;
  std::vector<cplx> values;  // n_x * 4, x-major

  SpinorSlice() = default;
  explicit SpinorSlice(const SpacetimeGrid& g, int t = 0)
      : grid(g), t_index(t), values(size_t(g.n_x) * 4, cplx(0, 0)) {}

  cplx* at(int i) { return values.data() + size_t(i) * 4; }
  const cplx* at(int i) const { return values.data() + size_t(i) * 4; }

  Eigen::Map<Vec4> spinor(int i) { return Eigen::Map<Vec4>(at(i)); }
  Eigen::Map<const Vec4> spinor(int i) const {
    return Eigen::Map<const Vec4>(at(i));
  }

  // contiguous view as a 4*n_x complex vector (component-major per site)
  Eigen::Map<Eigen::VectorXcd> as_vector() {
    return Eigen::Map<Eigen::VectorXcd>(values.data(), values.size());
  }
  Eigen::Map<const Eigen::VectorXcd> as_vector() const {
    return Eigen::Map<const Eigen::VectorXcd>(values.data(), values.size());
  }
};

// 4-component complex amplitude per (t, x) site; the optimization variable.
struct SpinorField {
  SpacetimeGrid grid;
  std::vector<cplx> values;  // (t, x, component) row-major

  SpinorField() = default;
  explicit SpinorField(const SpacetimeGrid& g)
      : grid(g), values(size_t(g.dof()), cplx(0, 0)) {
    g.validate();
  }

  cplx* at(int s, int i) { return values.data() + size_t(grid.site(s, i)) * 4; }
  const cplx* at(int s, int i) const {
    return values.data() + size_t(grid.site(s, i)) * 4;
  }

  Eigen::Map<Vec4> spinor(int s, int i) { return Eigen::Map<Vec4>(at(s, i)); }
  Eigen::Map<const Vec4> spinor(int s, int i) const {
    return Eigen::Map<const Vec4>(at(s, i));
  }

  SpinorSlice slice(int s) const {
    SpinorSlice sl(grid, s);
    std::memcpy(sl.values.data(), values.data() + size_t(s) * grid.n_x * 4,
                sizeof(cplx) * size_t(grid.n_x) * 4);
    return sl;
  }

  void set_slice(int s, const SpinorSlice& sl) {
    require(sl.values.size() == size_t(grid.n_x) * 4, "set_slice: size mismatch");
    std::memcpy(values.data() + size_t(s) * grid.n_x * 4, sl.values.data(),
                sizeof(cplx) * size_t(grid.n_x) * 4);
  }

  bool finite() const {
    for (const cplx& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
};

// ------------------------------------------------------------- reductions
// Summation order is fixed (site-major, component inner) so repeated runs
// are bit-identical.

// Sum_x a^dag(x) b(x) dx
inline cplx inner_product_3d(const SpinorSlice& a, const SpinorSlice& b) {
  require(a.grid.same_shape(b.grid), "inner_product_3d: mismatched grids");
  cplx acc(0, 0);
  const int n = a.grid.n_x;
  for (int i = 0; i < n; ++i) {
    const cplx* pa = a.at(i);
    const cplx* pb = b.at(i);
    for (int c = 0; c < 4; ++c) acc += std::conj(pa[c]) * pb[c];
  }
  return acc * a.grid.dx;
}

using SliceOperator = std::function<SpinorSlice(const SpinorSlice&)>;

// <a|O|b>_t = inner_product_3d(a, O(b))
inline cplx matrix_element(const SpinorSlice& a, const SliceOperator& op,
                           const SpinorSlice& b) {
  return inner_product_3d(a, op(b));
}

// Sum_{t,x} psi^dag psi dt dx; flags the degenerate zero field, for which
// expectation values are undefined.
inline double norm_4d(const SpinorField& psi) {
  double acc = 0.0;
  for (const cplx& v : psi.values) acc += std::norm(v);
  acc *= psi.grid.cell_volume();
  require(acc > 0.0, "norm_4d: zero field (expectations undefined)");
  return acc;
}

inline double slice_norm2(const SpinorSlice& s) {
  double acc = 0.0;
  for (const cplx& v : s.values) acc += std::norm(v);
  return acc * s.grid.dx;
}

// -------------------------------------------------------------------- io
// Binary field container "VPF1": dims and spacings, then row-major
// (t, x, component) re/im doubles, little-endian.

inline void save_field(const SpinorField& f, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  require(fp != nullptr, "save_field: cannot open " + path);
  const char magic[4] = {'V', 'P', 'F', '1'};
  uint32_t nt = uint32_t(f.grid.n_t), nx = uint32_t(f.grid.n_x);
  uint8_t bc = f.grid.x_boundary == XBoundary::periodic ? 1 : 0;
  std::fwrite(magic, 1, 4, fp);
  std::fwrite(&nt, sizeof nt, 1, fp);
  std::fwrite(&nx, sizeof nx, 1, fp);
  std::fwrite(&f.grid.dt, sizeof(double), 1, fp);
  std::fwrite(&f.grid.dx, sizeof(double), 1, fp);
  std::fwrite(&f.grid.origin_t, sizeof(double), 1, fp);
  std::fwrite(&bc, 1, 1, fp);
  std::fwrite(f.values.data(), sizeof(cplx), f.values.size(), fp);
  std::fclose(fp);
}

inline SpinorField load_field(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  require(fp != nullptr, "load_field: cannot open " + path);
  char magic[4];
  uint32_t nt = 0, nx = 0;
  uint8_t bc = 0;
  SpacetimeGrid g;
  bool ok = std::fread(magic, 1, 4, fp) == 4 && std::memcmp(magic, "VPF1", 4) == 0;
  ok = ok && std::fread(&nt, sizeof nt, 1, fp) == 1;
  ok = ok && std::fread(&nx, sizeof nx, 1, fp) == 1;
  ok = ok && std::fread(&g.dt, sizeof(double), 1, fp) == 1;
  ok = ok && std::fread(&g.dx, sizeof(double), 1, fp) == 1;
  ok = ok && std::fread(&g.origin_t, sizeof(double), 1, fp) == 1;
  ok = ok && std::fread(&bc, 1, 1, fp) == 1;
  if (!ok) {
    std::fclose(fp);
    throw SimError("load_field: bad header in " + path);
  }
  g.n_t = int(nt);
  g.n_x = int(nx);
  g.x_boundary = bc ? XBoundary::periodic : XBoundary::open;
  SpinorField f(g);
  ok = std::fread(f.values.data(), sizeof(cplx), f.values.size(), fp) ==
       f.values.size();
  std::fclose(fp);
  require(ok, "load_field: truncated payload in " + path);
  return f;
}

}  // namespace vpsim
