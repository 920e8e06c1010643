#include <catch2/catch_amalgamated.hpp>
#include <vpsim/expectations.hpp>

#include "support.hpp"

using namespace vpsim;
using namespace testsup;

namespace {

// static spatial profile with a trivial time phase (density stationary)
SpinorField profile_field(const SpacetimeGrid& g,
                          const std::function<double(double)>& prof,
                          double omega = 1.0) {
  SpinorField f(g);
  Vec4 u;
  u << 1, 0, 0, 0;
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i)
      f.spinor(s, i) =
          u * prof(g.x_at(i)) * std::exp(-I * omega * g.time_at(s));
  return f;
}

SpinorField superposed_planes(const SpacetimeGrid& g, int k1, int k2, double m,
                              cplx a1 = {1, 0}, cplx a2 = {1, 0}) {
  SpinorField f1 = plane_wave(g, k1, +1, m);
  SpinorField f2 = plane_wave(g, k2, +1, m);
  SpinorField out(g);
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = a1 * f1.values[i] + a2 * f2.values[i];
  return out;
}

}  // namespace

TEST_CASE("expect_1: identity, gamma0extreme and scale invariance") {
  SpacetimeGrid g = small_grid(8, 64, 0.05, 0.2);
  MassParameter m(1.0);
  SpinorField psi = plane_wave(g, 1, +1, m.m);

  PointOperator ident = [](const Vec4& v, int, int) { return v; };
  REQUIRE(std::abs(expect_1(ident, psi) - cplx(1, 0)) < 1e-12);

  GammaSet gm = build_gamma_set();
  PointOperator g0 = [&gm](const Vec4& v, int, int) { return Vec4(gm[0] * v); };
  double p = lattice_momentum(g, 1);
  cplx val = expect_1(g0, psi);
  REQUIRE(val.real() < 1.0);
  REQUIRE(std::abs(val.real() - 1.0) < (p * p) / (m.m * m.m));
  REQUIRE(std::abs(val.imag()) < 1e-12);

  SpinorField two = psi;
  for (auto& v : two.values) v *= cplx(0.0, 2.0);
  REQUIRE(std::abs(expect_1(g0, two) - val) < 1e-12);
}

TEST_CASE("momentum density reproduces the plane-wave momentum") {
  SpacetimeGrid g = small_grid(10, 16, 0.04, 0.3);
  MassParameter m(1.0);
  int k = 2;
  SpinorField psi = plane_wave(g, k, +1, m.m);
  MomentumDensity md = momentum_density(psi, Potential::zero());
  double pt = lattice_momentum(g, k);
  double e = plane_energy(g, k, m.m, +1);
  // interior sites (one-sided time stencils touch only the edge slices)
  for (int s = 1; s + 1 < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i) {
      size_t kk = size_t(g.site(s, i));
      REQUIRE(md.p1[kk] == Catch::Approx(pt).margin(1e-10));
      // p^0 picks the sinc-corrected frequency of the discrete dt stencil
      REQUIRE(md.p0[kk] == Catch::Approx(e * std::sin(e * g.dt) / (e * g.dt))
                               .margin(1e-10));
    }
}

TEST_CASE("expect_2: unit operator, label symmetry, footnote variance identity") {
  SpacetimeGrid g = small_grid(120, 24, 0.05, 0.25);
  double x_mid = 0.5 * g.extent_x();
  double sigma = 0.45;
  SpinorField psi = profile_field(
      g, [&](double x) { return std::exp(-0.5 * std::pow((x - x_mid) / sigma, 2)); });

  PairwiseOptions opts;
  opts.kernel = KernelVariant::inverse_distance;

  TwoPointOperator unit = [](int, int, int, int) { return 1.0; };
  McEstimate one = expect_2(unit, psi, opts);
  REQUIRE(one.value == Catch::Approx(1.0).epsilon(1e-12));

  TwoPointOperator sep2 = [&g](int, int i1, int, int i2) {
    double d = (i1 - i2) * g.dx;
    return d * d;
  };
  McEstimate got = expect_2(sep2, psi, opts);

  // direct quadrature oracle: twice the spatial variance of the density
  double w = 0, mx = 0, mx2 = 0;
  for (int i = 0; i < g.n_x; ++i) {
    double rho = std::norm(psi.spinor(0, i)(0));
    w += rho;
    mx += rho * g.x_at(i);
    mx2 += rho * g.x_at(i) * g.x_at(i);
  }
  mx /= w;
  mx2 /= w;
  double oracle = 2.0 * (mx2 - mx * mx);
  REQUIRE(got.value == Catch::Approx(oracle).epsilon(0.02));

  TwoPointOperator swapped = [&g](int s1, int i1, int s2, int i2) {
    double d = (i2 - i1) * g.dx;
    return d * d;
  };
  REQUIRE(expect_2(swapped, psi, opts).value == Catch::Approx(got.value));
}

TEST_CASE("delta_x2: positivity, width scaling, translation invariance") {
  SpacetimeGrid g = small_grid(120, 32, 0.05, 0.25);
  auto packet = [&](double sigma, double shift) {
    double x_mid = 0.5 * g.extent_x() + shift;
    return profile_field(g, [&](double x) {
      return std::exp(-0.5 * std::pow((x - x_mid) / sigma, 2));
    });
  };
  PairwiseOptions opts;  // covariant kernel
  double v1 = delta_x2(packet(0.35, 0.0), opts).value;
  double v2 = delta_x2(packet(0.70, 0.0), opts).value;
  REQUIRE(v1 >= 0.0);
  REQUIRE(v2 / v1 == Catch::Approx(4.0).epsilon(0.05));

  double shifted = delta_x2(packet(0.35, 3.0 * g.dx), opts).value;
  REQUIRE(shifted == Catch::Approx(v1).epsilon(1e-6));
}

TEST_CASE("delta_p2: plane wave zero, grows with superposition momentum") {
  SpacetimeGrid g = small_grid(40, 32, 0.05, 0.25);
  MassParameter m(1.0);
  PairwiseOptions opts;

  SpinorField plane = plane_wave(g, 2, +1, m.m);
  double excl = 0;
  McEstimate zero = delta_p2(plane, Potential::zero(), opts, 1e-9, &excl);
  REQUIRE(std::abs(zero.value) < 1e-9);
  REQUIRE(excl == 0.0);

  double prev = 0.0;
  for (int k : {1, 2, 3}) {
    SpinorField sup = superposed_planes(g, k, -k, m.m);
    double val = delta_p2(sup, Potential::zero(), opts).value;
    REQUIRE(val > prev);
    prev = val;
  }

  // direct quadrature oracle for the +-k superposition: the momentum
  // difference squared, kernel-weighted, must stay below (2 ptilde)^2 and
  // above zero; global phase leaves it unchanged
  SpinorField sup = superposed_planes(g, 2, -2, m.m);
  double val = delta_p2(sup, Potential::zero(), opts).value;
  double pt = lattice_momentum(g, 2);
  REQUIRE(val > 0.0);
  REQUIRE(val <= 4.0 * pt * pt * 1.05);
  SpinorField rot = sup;
  for (auto& v : rot.values) v *= std::exp(I * 1.234);
  REQUIRE(delta_p2(rot, Potential::zero(), opts).value ==
          Catch::Approx(val).epsilon(1e-12));
}

TEST_CASE("expect_4: shared-sample unit ratio and label-swap invariance") {
  SpacetimeGrid g = small_grid(24, 24, 0.05, 0.25);
  MassParameter m(1.0);
  SpinorField psi = superposed_planes(g, 1, -1, m.m);
  WeightTable wtab(g.dx);
  QuadSampleOptions qopts;
  qopts.draws = 60000;
  qopts.seed = 7;
  QuadSampleSet set = draw_quadruples(g, wtab, qopts);
  REQUIRE_FALSE(set.empty());

  FourPointOperator unit = [](const QuadSample&) { return 1.0; };
  McEstimate one = expect_4(unit, psi, set);
  REQUIRE(one.value == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(one.stderr_ < 1e-12);

  // symmetric operator under (1<->2) and (3<->4) label swaps
  FourPointOperator sym = [&g](const QuadSample& q) {
    double d12 = std::abs(q.i[0] - q.i[1]) * g.dx;
    double d34 = std::abs(q.i[2] - q.i[3]) * g.dx;
    return d12 * d34;
  };
  QuadSampleSet swapped = set;
  for (auto& q : swapped.samples) {
    std::swap(q.s[0], q.s[1]);
    std::swap(q.i[0], q.i[1]);
    std::swap(q.s[2], q.s[3]);
    std::swap(q.i[2], q.i[3]);
  }
  REQUIRE(expect_4(sym, psi, set).value ==
          Catch::Approx(expect_4(sym, psi, swapped).value).epsilon(1e-12));
}

TEST_CASE("a2: nonnegative, tiny for plane waves, grows with separation") {
  SpacetimeGrid g = small_grid(24, 24, 0.05, 0.25);
  MassParameter m(1.0);
  WeightTable wtab(g.dx);
  QuadSampleOptions qopts;
  qopts.draws = 80000;
  qopts.seed = 11;
  QuadSampleSet set = draw_quadruples(g, wtab, qopts);

  SpinorField plane = plane_wave(g, 1, +1, m.m);
  McEstimate ap = a2(plane, Potential::zero(), set);
  REQUIRE(ap.value >= 0.0);
  REQUIRE(ap.value < 1e-9);

  double prev = ap.value;
  for (int k : {1, 2, 3}) {
    SpinorField sup = superposed_planes(g, k, -k, m.m);
    McEstimate est = a2(sup, Potential::zero(), set);
    REQUIRE(est.value >= 0.0);
    REQUIRE(est.value > prev);
    prev = est.value;
  }
}

TEST_CASE("expectations are invariant under global rescaling of psi") {
  SpacetimeGrid g = small_grid(20, 20, 0.05, 0.25);
  MassParameter m(1.0);
  SpinorField psi = superposed_planes(g, 1, -2, m.m, {0.8, 0.1}, {0.3, -0.5});
  WeightTable wtab(g.dx);
  QuadSampleOptions qopts;
  qopts.draws = 30000;
  QuadSampleSet set = draw_quadruples(g, wtab, qopts);
  double dx2_ref = delta_x2(psi).value;
  double a2_ref = a2(psi, Potential::zero(), set).value;

  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    cplx alpha(rng.uniform(-2, 2), rng.uniform(-2, 2));
    if (std::abs(alpha) < 0.1) alpha += 1.0;
    SpinorField scaled = psi;
    for (auto& v : scaled.values) v *= alpha;
    REQUIRE(std::abs(delta_x2(scaled).value - dx2_ref) <=
            1e-10 * std::abs(dx2_ref));
    REQUIRE(std::abs(a2(scaled, Potential::zero(), set).value - a2_ref) <=
            1e-10 * std::abs(a2_ref) + 1e-14);
  }
}

TEST_CASE("time translation of compact data leaves expectations unchanged") {
  SpacetimeGrid g = small_grid(60, 16, 0.05, 0.3);
  MassParameter m(1.0);
  // compact support on slices [10, 26)
  SpinorField a(g), b(g);
  Rng rng(3);
  for (int s = 10; s < 26; ++s)
    for (int i = 0; i < g.n_x; ++i)
      for (int c = 0; c < 4; ++c) {
        cplx v(rng.uniform(-1, 1), rng.uniform(-1, 1));
        a.at(s, i)[c] = v;
        b.at(s + 12, i)[c] = v;  // rigid shift by 12 slices
      }
  double va = delta_x2(a).value;
  double vb = delta_x2(b).value;
  REQUIRE(va == Catch::Approx(vb).epsilon(1e-12));
}

TEST_CASE("frozen quadruple sets are deterministic given a seed") {
  SpacetimeGrid g = small_grid(16, 16, 0.05, 0.3);
  WeightTable w1(g.dx), w2(g.dx);
  QuadSampleOptions qopts;
  qopts.draws = 20000;
  qopts.seed = 31337;
  QuadSampleSet s1 = draw_quadruples(g, w1, qopts);
  QuadSampleSet s2 = draw_quadruples(g, w2, qopts);
  REQUIRE(s1.samples.size() == s2.samples.size());
  for (size_t q = 0; q < s1.samples.size(); ++q) {
    REQUIRE(std::memcmp(s1.samples[q].s, s2.samples[q].s, sizeof(int) * 4) == 0);
    REQUIRE(s1.samples[q].inv_w == s2.samples[q].inv_w);
  }
}
