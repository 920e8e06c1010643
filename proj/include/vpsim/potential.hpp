#pragma once

#include <array>

#include "vpsim/grid.hpp"

namespace vpsim {

struct MassParameter {
  double m = 1.0;

  explicit MassParameter(double mass = 1.0) : m(mass) {
    require(m > 0.0, "mass must be positive");
  }
};

// Electromagnetic potential A^mu tabulated on grid sites (energy units)
// plus the charge e. Empty component tables mean identically zero.
struct Potential {
  std::array<std::vector<double>, 4> a;  // A^0..A^3, each n_t*n_x or empty
  double charge = 0.0;

  static Potential zero() { return Potential{}; }

  bool trivial() const {
    if (charge == 0.0) return true;
    for (const auto& c : a)
      if (!c.empty()) return false;
    return true;
  }

  double at(int comp, const SpacetimeGrid& g, int s, int i) const {
    const auto& tab = a[comp];
    if (tab.empty()) return 0.0;
    return tab[size_t(g.site(s, i))];
  }

  // Smoothness proxy: largest site-to-site change along the time axis, in
  // energy units per slice. Supports the assumption that H varies
  // continuously with tau; callers compare against a configured bound.
  double max_time_step(const SpacetimeGrid& g) const {
    double worst = 0.0;
    for (const auto& tab : a) {
      if (tab.empty()) continue;
      for (int s = 0; s + 1 < g.n_t; ++s)
        for (int i = 0; i < g.n_x; ++i)
          worst = std::max(worst, std::abs(tab[size_t(g.site(s + 1, i))] -
                                           tab[size_t(g.site(s, i))]));
    }
    return worst * std::abs(charge);
  }
};

}  // namespace vpsim
