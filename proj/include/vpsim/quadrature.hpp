#pragma once

#include "vpsim/common.hpp"

namespace vpsim {

// tanh-sinh (double-exponential) quadrature on (a, b). Converges at
// machine precision for integrable endpoint singularities like the
// 1/sqrt(-z^2) edge of the covariant kernel.
template <class F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-12,
                 int max_level = 12) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  auto node = [&](double t, double& x, double& w) {
    double u = 0.5 * PI * std::sinh(t);
    double s = std::tanh(u);
    x = mid + half * s;
    double ch = std::cosh(u);
    w = half * 0.5 * PI * std::cosh(t) / (ch * ch);
  };

  const double t_max = 6.0;  // weights below machine epsilon past this
  double h = 1.0;
  double x, w;
  node(0.0, x, w);
  double sum = f(x) * w;
  for (int k = 1; k * h <= t_max; ++k) {
    node(k * h, x, w);
    if (w < 1e-300) break;
    sum += f(x) * w;
    node(-k * h, x, w);
    sum += f(x) * w;
  }
  for (int level = 0; level < max_level; ++level) {
    double prev = sum * h;
    double add = 0.0;
    // new nodes at odd multiples of h/2
    for (int k = 1; 0.5 * h * k <= t_max; k += 2) {
      node(0.5 * h * k, x, w);
      if (w < 1e-300) break;
      add += f(x) * w;
      node(-0.5 * h * k, x, w);
      add += f(x) * w;
    }
    h *= 0.5;
    sum = sum + add;
    double cur = sum * h;
    if (level > 2 && std::abs(cur - prev) <= tol * (std::abs(cur) + 1e-300))
      return cur;
  }
  return sum * h;
}

// Recursive adaptive Simpson.
namespace detail {
template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10,
                        int depth = 24) {
  if (b <= a) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace vpsim
