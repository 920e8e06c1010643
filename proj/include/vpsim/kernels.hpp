#pragma once

#include <array>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <unordered_map>

#include "vpsim/quadrature.hpp"

namespace vpsim {

struct FourVector {
  double t = 0, x = 0, y = 0, z = 0;

  // z^mu z_mu with signature (+,-,-,-)
  double interval2() const { return t * t - x * x - y * y - z * z; }
  double spatial_norm() const { return std::sqrt(x * x + y * y + z * z); }
};

enum class KernelVariant { step, inverse_distance, covariant };

inline const char* kernel_name(KernelVariant v) {
  switch (v) {
    case KernelVariant::step: return "step";
    case KernelVariant::inverse_distance: return "invdist";
    case KernelVariant::covariant: return "covariant";
  }
  return "?";
}

// Spacelike-separation kernel f(z). All variants vanish for timelike and
// exactly lightlike separations (u(0) = 0, consistent with the open
// spacelike region). inverse_distance and covariant integrate to 1 over
// the time component at fixed spatial separation.
inline double kernel_f2(const FourVector& zv, KernelVariant variant) {
  const double z2 = zv.interval2();
  if (z2 >= 0.0) return 0.0;
  switch (variant) {
    case KernelVariant::step:
      return 1.0;
    case KernelVariant::inverse_distance:
      return 0.5 / zv.spatial_norm();
    case KernelVariant::covariant:
      return 1.0 / (PI * std::sqrt(-z2));
  }
  return 0.0;
}

// ------------------------------------------------------------ weight W

// Pairwise spatial separations of four points in the fixed order
// (d12, d13, d14, d23, d24, d34).
using Separations = std::array<double, 6>;

// Trivial (non-covariant) weight: the volume of mutually spacelike time
// offsets, W = int dt2 dt3 dt4 prod_{k<l} u(d_kl^2 - (t_k - t_l)^2) at
// t1 = 0. The innermost interval is closed-form; the outer two levels use
// recursive adaptive quadrature. Zero measure (some d_kl = 0) gives W = 0.
inline double weight_W_trivial(const Separations& d, double tol = 1e-9) {
  const double d12 = d[0], d13 = d[1], d14 = d[2];
  const double d23 = d[3], d24 = d[4], d34 = d[5];
  for (double v : d)
    if (v <= 0.0) return 0.0;

  auto len4 = [&](double t2, double t3) {
    double lo = std::max({-d14, t2 - d24, t3 - d34});
    double hi = std::min({d14, t2 + d24, t3 + d34});
    return std::max(0.0, hi - lo);
  };
  auto inner = [&](double t2) {
    double lo = std::max(-d13, t2 - d23);
    double hi = std::min(d13, t2 + d23);
    if (hi <= lo) return 0.0;
    return adaptive_simpson([&](double t3) { return len4(t2, t3); }, lo, hi,
                            tol);
  };
  return adaptive_simpson(inner, -d12, d12, tol);
}

// Memoized W over collinear lattice gap triples (g1, g2, g3) in units of
// dx: sites sorted along x, gaps between consecutive ones. Sorting plus
// mirror symmetry canonicalizes the key.
class WeightTable {
 public:
  explicit WeightTable(double dx) : dx_(dx) {}

  double dx() const { return dx_; }

  // site coordinates as integer x indices
  double lookup(int i1, int i2, int i3, int i4) {
    int v[4] = {i1, i2, i3, i4};
    std::sort(v, v + 4);
    int g1 = v[1] - v[0], g2 = v[2] - v[1], g3 = v[3] - v[2];
    if (g1 == 0 || g2 == 0 || g3 == 0) return 0.0;  // zero-measure tuple
    if (g3 < g1) std::swap(g1, g3);                 // mirror symmetry
    uint64_t key = (uint64_t(g1) << 40) | (uint64_t(g2) << 20) | uint64_t(g3);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = table_.find(key);
      if (it != table_.end()) return it->second;
    }
    double a = g1 * dx_, b = g2 * dx_, c = g3 * dx_;
    Separations d{a, a + b, a + b + c, b, b + c, c};
    double w = weight_W_trivial(d);
    std::lock_guard<std::mutex> lock(mu_);
    table_.emplace(key, w);
    return w;
  }

  size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return table_.size();
  }

  // -------- disk cache: "VPW1" header, dx, entry count, key/value pairs.
  // Any mismatch or corruption is ignored and the table recomputes.
  bool save(const std::string& path) const {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) return false;
    std::lock_guard<std::mutex> lock(mu_);
    const char magic[4] = {'V', 'P', 'W', '1'};
    uint64_t n = table_.size();
    uint64_t csum = fnv1a(&dx_, sizeof dx_);
    std::fwrite(magic, 1, 4, fp);
    std::fwrite(&dx_, sizeof dx_, 1, fp);
    std::fwrite(&n, sizeof n, 1, fp);
    for (const auto& [k, v] : table_) {
      csum = fnv1a(&k, sizeof k, csum);
      csum = fnv1a(&v, sizeof v, csum);
      std::fwrite(&k, sizeof k, 1, fp);
      std::fwrite(&v, sizeof v, 1, fp);
    }
    std::fwrite(&csum, sizeof csum, 1, fp);
    std::fclose(fp);
    return true;
  }

  bool load(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) return false;
    char magic[4];
    double dx = 0;
    uint64_t n = 0;
    bool ok = std::fread(magic, 1, 4, fp) == 4 &&
              std::memcmp(magic, "VPW1", 4) == 0 &&
              std::fread(&dx, sizeof dx, 1, fp) == 1 && dx == dx_ &&
              std::fread(&n, sizeof n, 1, fp) == 1 && n < (1ull << 32);
    std::unordered_map<uint64_t, double> fresh;
    uint64_t csum = fnv1a(&dx, sizeof dx);
    for (uint64_t i = 0; ok && i < n; ++i) {
      uint64_t k;
      double v;
      ok = std::fread(&k, sizeof k, 1, fp) == 1 &&
           std::fread(&v, sizeof v, 1, fp) == 1;
      if (ok) {
        csum = fnv1a(&k, sizeof k, csum);
        csum = fnv1a(&v, sizeof v, csum);
        fresh.emplace(k, v);
      }
    }
    uint64_t want = 0;
    ok = ok && std::fread(&want, sizeof want, 1, fp) == 1 && want == csum;
    std::fclose(fp);
    if (!ok) return false;
    std::lock_guard<std::mutex> lock(mu_);
    table_ = std::move(fresh);
    return true;
  }

 private:
  double dx_;
  mutable std::mutex mu_;
  std::unordered_map<uint64_t, double> table_;
};

}  // namespace vpsim
