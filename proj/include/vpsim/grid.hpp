#pragma once

#include "vpsim/common.hpp"

namespace vpsim {

enum class XBoundary { periodic, open };

// Bounded lattice over (t, x) in natural units (hbar = c = 1, spacings in
// 1/m). One spatial axis is active; spinors keep all four components.
struct SpacetimeGrid {
  int n_t = 0;
  int n_x = 0;
  double dt = 0.0;
  double dx = 0.0;
  double origin_t = 0.0;  // lab-time coordinate of the first slice
  XBoundary x_boundary = XBoundary::periodic;

  int sites() const { return n_t * n_x; }
  int dof() const { return n_t * n_x * 4; }
  int site(int s, int i) const { return s * n_x + i; }
  double time_at(int s) const { return origin_t + s * dt; }
  double x_at(int i) const { return i * dx; }
  double extent_t() const { return n_t * dt; }
  double extent_x() const { return n_x * dx; }
  double cell_volume() const { return dt * dx; }

  bool same_shape(const SpacetimeGrid& o) const {
    return n_t == o.n_t && n_x == o.n_x && dt == o.dt && dx == o.dx &&
           x_boundary == o.x_boundary;
  }

  void validate() const {
    require(n_t >= 1 && n_x >= 1, "grid: n_t and n_x must be positive");
    require(dt > 0 && dx > 0, "grid: dt and dx must be positive");
  }
};

}  // namespace vpsim
