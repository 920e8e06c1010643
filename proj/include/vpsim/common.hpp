#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vpsim {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double PI = 3.14159265358979323846;

// ---------------------------------------------------------------- errors

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw SimError(msg);
}

// ------------------------------------------------------------------- rng

// splitmix64-based generator; portable and reproducible across platforms,
// which std::uniform_real_distribution is not.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed = 0x9e3779b97f4a7c15ULL) : state(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // standard normal (Box-Muller, always consumes two draws)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * PI * u2);
  }
};

// FNV-1a, used for config hashes in manifests and cache headers.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

// ----------------------------------------------------- deterministic pool

// Runs f(chunk) for chunk = 0..n_chunks-1 on up to n_threads threads.
// Results must be written to per-chunk slots and merged by the caller in
// chunk order; with a fixed chunk count the outcome is independent of the
// thread count, so reruns are bit-identical.
template <class F>
void parallel_chunks(int n_chunks, int n_threads, F&& f) {
  if (n_threads <= 1 || n_chunks <= 1) {
    for (int c = 0; c < n_chunks; ++c) f(c);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  int nw = std::min(n_threads, n_chunks);
  workers.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        int c = next.fetch_add(1);
        if (c >= n_chunks) return;
        f(c);
      }
    });
  }
  for (auto& t : workers) t.join();
}

inline int default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : int(n);
}

}  // namespace vpsim
