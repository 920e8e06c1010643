#pragma once

#include "vpsim/dirac.hpp"
#include "vpsim/kernels.hpp"

namespace vpsim {

// ----------------------------------------------------------- one point

// sitewise linear operator psi(site) -> O psi(site)
using PointOperator = std::function<Vec4(const Vec4&, int s, int i)>;

// <<O>>_1 = sum psi^dag O psi / sum psi^dag psi
inline cplx expect_1(const PointOperator& op, const SpinorField& psi) {
  double den = norm_4d(psi) / psi.grid.cell_volume();
  cplx num(0, 0);
  for (int s = 0; s < psi.grid.n_t; ++s)
    for (int i = 0; i < psi.grid.n_x; ++i)
      num += psi.spinor(s, i).dot(op(psi.spinor(s, i), s, i));
  return num / den;
}

// ------------------------------------------------ gauge-covariant pi^mu

// pi^0 psi = (i d_t - eA^0) psi ; pi^1 psi = (-i d_x - eA^1) psi
inline SpinorField apply_pi(int mu, const SpinorField& psi, const Potential& pot) {
  const SpacetimeGrid& g = psi.grid;
  check_stencil_size(g);
  require(mu == 0 || mu == 1, "apply_pi: only t and x components carry derivatives");
  SpinorField out(g);
  const double e = pot.charge;
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i) {
      Vec4 acc = Vec4::Zero();
      if (mu == 0) {
        const Stencil st = time_stencil(s, g);
        for (const auto& t : st.term)
          acc += (I * t.coeff) * psi.spinor(t.index, i);
      } else {
        const Stencil sx = space_stencil(i, g);
        for (const auto& t : sx.term)
          acc += (-I * t.coeff) * psi.spinor(s, t.index);
      }
      acc -= e * pot.at(mu, g, s, i) * psi.spinor(s, i);
      out.spinor(s, i) = acc;
    }
  return out;
}

// Local momentum density p^mu(x) = Re[psi^dag (pi^mu psi)] / (psi^dag psi)
// (probability-current style; reproduces p^mu = k^mu on plane waves).
// Sites with density below floor_rel * mean density are marked invalid and
// excluded from kernel-weighted sampling; the exclusion fraction is kept.
struct MomentumDensity {
  std::vector<double> p0, p1;  // per site
  std::vector<double> rho;     // psi^dag psi per site
  std::vector<char> valid;
  double excluded_fraction = 0.0;
};

// With rho_reg_rel > 0 the division is regularized as rho + reg*mean(rho)
// and no site is excluded; that keeps the optimizer's surrogate smooth
// across density nodes. (Note the regularized p is not scale-invariant at
// the reg scale; reg is kept tiny.)
inline MomentumDensity momentum_density(const SpinorField& psi, const Potential& pot,
                                        double floor_rel = 1e-9,
                                        double rho_reg_rel = 0.0) {
  const SpacetimeGrid& g = psi.grid;
  MomentumDensity md;
  const size_t n = size_t(g.sites());
  md.p0.assign(n, 0.0);
  md.p1.assign(n, 0.0);
  md.rho.assign(n, 0.0);
  md.valid.assign(n, 1);

  SpinorField pi0 = apply_pi(0, psi, pot);
  SpinorField pi1 = apply_pi(1, psi, pot);
  double mean_rho = 0.0;
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i) {
      size_t k = size_t(g.site(s, i));
      md.rho[k] = psi.spinor(s, i).squaredNorm();
      mean_rho += md.rho[k];
    }
  mean_rho /= double(n);
  if (rho_reg_rel > 0.0) {
    const double reg = rho_reg_rel * mean_rho;
    for (int s = 0; s < g.n_t; ++s)
      for (int i = 0; i < g.n_x; ++i) {
        size_t k = size_t(g.site(s, i));
        md.p0[k] = psi.spinor(s, i).dot(pi0.spinor(s, i)).real() / (md.rho[k] + reg);
        md.p1[k] = psi.spinor(s, i).dot(pi1.spinor(s, i)).real() / (md.rho[k] + reg);
      }
    return md;
  }
  const double floor = floor_rel * mean_rho;
  size_t excluded = 0;
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i) {
      size_t k = size_t(g.site(s, i));
      if (md.rho[k] <= floor) {
        md.valid[k] = 0;
        ++excluded;
        continue;
      }
      md.p0[k] = psi.spinor(s, i).dot(pi0.spinor(s, i)).real() / md.rho[k];
      md.p1[k] = psi.spinor(s, i).dot(pi1.spinor(s, i)).real() / md.rho[k];
    }
  md.excluded_fraction = double(excluded) / double(n);
  return md;
}

// ----------------------------------------------------------- two point

using TwoPointOperator =
    std::function<double(int s1, int i1, int s2, int i2)>;

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;   // 0 for deterministic evaluation
  long long samples = 0;  // accepted samples (or pairs visited)
  double accepted_fraction = 1.0;
};

struct PairwiseOptions {
  KernelVariant kernel = KernelVariant::covariant;
  long long pair_threshold = 1 << 25;  // full double loop below this
  long long mc_samples = 400000;
  int batches = 32;
  uint64_t seed = 12345;
  const std::vector<char>* valid = nullptr;  // optional site mask
};

// <<O2>>_2 as the ratio of kernel-weighted double sums over site pairs.
// Deterministic double loop on small grids, stratified Monte Carlo with a
// batch-mean standard error above the pair-count threshold.
inline McEstimate expect_2(const TwoPointOperator& op, const SpinorField& psi,
                           const PairwiseOptions& opts = {}) {
  const SpacetimeGrid& g = psi.grid;
  const int n_s = g.sites();
  std::vector<double> rho(size_t(n_s));
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i)
      rho[size_t(g.site(s, i))] = psi.spinor(s, i).squaredNorm();

  auto site_ok = [&](int k) {
    return opts.valid == nullptr || (*opts.valid)[size_t(k)] != 0;
  };
  auto kernel = [&](int s1, int i1, int s2, int i2) {
    FourVector z{(s1 - s2) * g.dt, (i1 - i2) * g.dx, 0, 0};
    return kernel_f2(z, opts.kernel);
  };

  McEstimate est;
  const long long n_pairs = (long long)n_s * n_s;
  if (n_pairs <= opts.pair_threshold) {
    double num = 0, den = 0;
    for (int s1 = 0; s1 < g.n_t; ++s1)
      for (int i1 = 0; i1 < g.n_x; ++i1) {
        int k1 = g.site(s1, i1);
        if (!site_ok(k1) || rho[size_t(k1)] == 0.0) continue;
        for (int s2 = 0; s2 < g.n_t; ++s2)
          for (int i2 = 0; i2 < g.n_x; ++i2) {
            int k2 = g.site(s2, i2);
            if (!site_ok(k2)) continue;
            double f = kernel(s1, i1, s2, i2);
            if (f == 0.0) continue;
            double w = rho[size_t(k1)] * rho[size_t(k2)] * f;
            num += w * op(s1, i1, s2, i2);
            den += w;
          }
      }
    require(den > 0.0, "expect_2: empty spacelike support");
    est.value = num / den;
    est.samples = n_pairs;
    return est;
  }

  // stratified MC: each batch runs one pass over strata of the first site
  Rng rng(opts.seed);
  const int strata = 16;
  const long long per_cell =
      std::max<long long>(1, opts.mc_samples / (opts.batches * strata));
  std::vector<double> bnum(size_t(opts.batches), 0.0),
      bden(size_t(opts.batches), 0.0);
  long long accepted = 0, drawn = 0;
  for (int b = 0; b < opts.batches; ++b) {
    for (int st = 0; st < strata; ++st) {
      int lo = int((long long)n_s * st / strata);
      int hi = int((long long)n_s * (st + 1) / strata);
      for (long long q = 0; q < per_cell; ++q) {
        int k1 = lo + int(rng.below(uint64_t(hi - lo)));
        int k2 = int(rng.below(uint64_t(n_s)));
        ++drawn;
        if (!site_ok(k1) || !site_ok(k2)) continue;
        int s1 = k1 / g.n_x, i1 = k1 % g.n_x;
        int s2 = k2 / g.n_x, i2 = k2 % g.n_x;
        double f = kernel(s1, i1, s2, i2);
        if (f == 0.0) continue;
        double w = rho[size_t(k1)] * rho[size_t(k2)] * f;
        bnum[size_t(b)] += w * op(s1, i1, s2, i2);
        bden[size_t(b)] += w;
        ++accepted;
      }
    }
  }
  double num = 0, den = 0;
  for (int b = 0; b < opts.batches; ++b) {
    num += bnum[size_t(b)];
    den += bden[size_t(b)];
  }
  require(den > 0.0, "expect_2: empty spacelike support in MC sampling");
  est.value = num / den;
  est.samples = accepted;
  est.accepted_fraction = double(accepted) / double(drawn);
  // batch-mean standard error of the ratio
  double mean = 0.0;
  int used = 0;
  std::vector<double> r(size_t(opts.batches));
  for (int b = 0; b < opts.batches; ++b) {
    if (bden[size_t(b)] <= 0.0) continue;
    r[size_t(used)] = bnum[size_t(b)] / bden[size_t(b)];
    mean += r[size_t(used)];
    ++used;
  }
  require(used >= 2, "expect_2: too few nonempty batches");
  mean /= used;
  double var = 0.0;
  for (int b = 0; b < used; ++b) var += (r[size_t(b)] - mean) * (r[size_t(b)] - mean);
  est.stderr_ = std::sqrt(var / (used * (used - 1.0)));
  double den_mean = den / used;
  double den_var = 0.0;
  for (int b = 0; b < opts.batches; ++b)
    den_var += (bden[size_t(b)] - den_mean) * (bden[size_t(b)] - den_mean);
  double den_se = std::sqrt(den_var / (opts.batches * (opts.batches - 1.0)));
  require(den_mean > 3.0 * den_se,
          "expect_2: denominator consistent with zero within its error bar");
  return est;
}

// delta x^2 = << -(x1-x2)^mu (x1-x2)_mu >>_2 (non-negative on support)
inline McEstimate delta_x2(const SpinorField& psi, const PairwiseOptions& opts = {}) {
  const SpacetimeGrid& g = psi.grid;
  TwoPointOperator op = [&g](int s1, int i1, int s2, int i2) {
    double dtv = (s1 - s2) * g.dt, dxv = (i1 - i2) * g.dx;
    return dxv * dxv - dtv * dtv;
  };
  return expect_2(op, psi, opts);
}

// delta p^2 = << -[p1-p2]^mu [p1-p2]_mu >>_2 with the local momentum
// density; low-density sites are excluded from sampling.
inline McEstimate delta_p2(const SpinorField& psi, const Potential& pot,
                           PairwiseOptions opts = {},
                           double floor_rel = 1e-9,
                           double* excluded_fraction = nullptr) {
  MomentumDensity md = momentum_density(psi, pot, floor_rel);
  if (excluded_fraction) *excluded_fraction = md.excluded_fraction;
  const SpacetimeGrid& g = psi.grid;
  TwoPointOperator op = [&md, &g](int s1, int i1, int s2, int i2) {
    size_t a = size_t(g.site(s1, i1)), b = size_t(g.site(s2, i2));
    double d0 = md.p0[a] - md.p0[b];
    double d1 = md.p1[a] - md.p1[b];
    return d1 * d1 - d0 * d0;
  };
  opts.valid = &md.valid;
  return expect_2(op, psi, opts);
}

// ----------------------------------------------------------- four point

struct QuadSample {
  int s[4];
  int i[4];
  double inv_w;  // 1 / W(spatial separations)
};

struct QuadSampleOptions {
  long long draws = 400000;  // quadruple draws before rejection
  int batches = 32;
  uint64_t seed = 99;
  bool mirror_time = false;  // add the time-reflected partner of each draw
};

// Frozen sample set over mutually spacelike site quadruples. Drawing is
// stratified over the first site; acceptance requires all six pairs
// spacelike and a positive-measure weight. The same frozen set serves the
// value and (elsewhere) the gradient, so the optimizer sees a smooth
// deterministic surrogate.
struct QuadSampleSet {
  std::vector<QuadSample> samples;              // batch-major
  std::vector<std::pair<size_t, size_t>> batch;  // [begin, end) per batch
  long long draws = 0;
  double accepted_fraction = 0.0;

  bool empty() const { return samples.empty(); }
};

inline QuadSampleSet draw_quadruples(const SpacetimeGrid& g, WeightTable& wtab,
                                     const QuadSampleOptions& opts = {}) {
  require(wtab.dx() == g.dx, "draw_quadruples: weight table dx mismatch");
  QuadSampleSet set;
  Rng rng(opts.seed);
  const int n_s = g.sites();
  const int strata = 16;
  const long long per_cell =
      std::max<long long>(1, opts.draws / (opts.batches * strata));

  auto spacelike = [&](int sa, int ia, int sb, int ib) {
    double dtv = std::abs(sa - sb) * g.dt;
    double dxv = std::abs(ia - ib) * g.dx;
    return dtv < dxv;
  };

  for (int b = 0; b < opts.batches; ++b) {
    size_t begin = set.samples.size();
    for (int st = 0; st < strata; ++st) {
      int lo = int((long long)n_s * st / strata);
      int hi = int((long long)n_s * (st + 1) / strata);
      for (long long q = 0; q < per_cell; ++q) {
        QuadSample qs;
        int k = lo + int(rng.below(uint64_t(hi - lo)));
        qs.s[0] = k / g.n_x;
        qs.i[0] = k % g.n_x;
        for (int a = 1; a < 4; ++a) {
          k = int(rng.below(uint64_t(n_s)));
          qs.s[a] = k / g.n_x;
          qs.i[a] = k % g.n_x;
        }
        ++set.draws;
        bool ok = true;
        for (int a = 0; a < 4 && ok; ++a)
          for (int c = a + 1; c < 4 && ok; ++c)
            ok = spacelike(qs.s[a], qs.i[a], qs.s[c], qs.i[c]);
        if (!ok) continue;
        double w = wtab.lookup(qs.i[0], qs.i[1], qs.i[2], qs.i[3]);
        if (w <= 0.0) continue;
        qs.inv_w = 1.0 / w;
        set.samples.push_back(qs);
        if (opts.mirror_time) {
          QuadSample mir = qs;
          for (int a = 0; a < 4; ++a) mir.s[a] = g.n_t - 1 - qs.s[a];
          set.samples.push_back(mir);
          ++set.draws;
        }
      }
    }
    set.batch.emplace_back(begin, set.samples.size());
  }
  set.accepted_fraction =
      set.draws > 0 ? double(set.samples.size()) / double(set.draws) : 0.0;
  return set;
}

using FourPointOperator = std::function<double(const QuadSample&)>;

// <<O4>>_4 by a shared-sample ratio estimator over the frozen set; the
// standard error comes from batch means.
inline McEstimate expect_4(const FourPointOperator& op, const SpinorField& psi,
                           const QuadSampleSet& set,
                           const std::vector<char>* valid = nullptr) {
  require(!set.empty(),
          "expect_4: no mutually spacelike quadruples in the sample set");
  const SpacetimeGrid& g = psi.grid;
  std::vector<double> rho(size_t(g.sites()));
  for (int s = 0; s < g.n_t; ++s)
    for (int i = 0; i < g.n_x; ++i)
      rho[size_t(g.site(s, i))] = psi.spinor(s, i).squaredNorm();

  McEstimate est;
  std::vector<double> bnum(set.batch.size(), 0.0), bden(set.batch.size(), 0.0);
  for (size_t b = 0; b < set.batch.size(); ++b) {
    for (size_t q = set.batch[b].first; q < set.batch[b].second; ++q) {
      const QuadSample& qs = set.samples[q];
      double w = qs.inv_w;
      bool ok = true;
      for (int a = 0; a < 4; ++a) {
        size_t k = size_t(g.site(qs.s[a], qs.i[a]));
        if (valid && (*valid)[k] == 0) {
          ok = false;
          break;
        }
        w *= rho[k];
      }
      if (!ok || w == 0.0) continue;
      bnum[b] += w * op(qs);
      bden[b] += w;
      ++est.samples;
    }
  }
  double num = 0, den = 0;
  for (size_t b = 0; b < set.batch.size(); ++b) {
    num += bnum[b];
    den += bden[b];
  }
  require(den > 0.0, "expect_4: zero-support sampling");
  est.value = num / den;
  est.accepted_fraction = set.accepted_fraction;

  double mean = 0.0;
  int used = 0;
  std::vector<double> r(set.batch.size());
  for (size_t b = 0; b < set.batch.size(); ++b) {
    if (bden[b] <= 0.0) continue;
    r[size_t(used)] = bnum[b] / bden[b];
    mean += r[size_t(used)];
    ++used;
  }
  if (used >= 2) {
    mean /= used;
    double var = 0.0;
    for (int b = 0; b < used; ++b)
      var += (r[size_t(b)] - mean) * (r[size_t(b)] - mean);
    est.stderr_ = std::sqrt(var / (used * (used - 1.0)));
  }
  return est;
}

// A2 = << { (x1-x2)^mu [p_mu(x3) - p_mu(x4)] }^2 >>_4
inline McEstimate a2(const SpinorField& psi, const Potential& pot,
                     const QuadSampleSet& set, double floor_rel = 1e-9,
                     double* excluded_fraction = nullptr) {
  MomentumDensity md = momentum_density(psi, pot, floor_rel);
  if (excluded_fraction) *excluded_fraction = md.excluded_fraction;
  const SpacetimeGrid& g = psi.grid;
  FourPointOperator op = [&md, &g](const QuadSample& q) {
    double dt12 = (q.s[0] - q.s[1]) * g.dt;
    double dx12 = (q.i[0] - q.i[1]) * g.dx;
    size_t k3 = size_t(g.site(q.s[2], q.i[2]));
    size_t k4 = size_t(g.site(q.s[3], q.i[3]));
    double dp0 = md.p0[k3] - md.p0[k4];
    double dp1 = md.p1[k3] - md.p1[k4];
    double s = dt12 * dp0 - dx12 * dp1;  // Minkowski contraction
    return s * s;
  };
  return expect_4(op, psi, set, &md.valid);
}

}  // namespace vpsim
