#ifndef PDGLOSS_NUMERIC_HPP
#define PDGLOSS_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pdgloss {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530941723212145818;

/// x * log(x / y) with 0 log 0 = 0 and x log(x/0) = inf.
inline double xlogxy(double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return kInf;
  return x * std::log(x / y);
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// c * log(x), where 0 * log(0) = 0 regardless of c.
inline double scaled_log(double c, double x) {
  if (c == 0.0) return 0.0;
  return c * std::log(x);
}

template <typename Real>
Real log_sum_exp(std::span<const Real> v) {
  Real m = -std::numeric_limits<Real>::infinity();
  for (Real x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  Real acc = 0;
  for (Real x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) h -= xlogx(x);
  return h;
}

inline double kl(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += xlogxy(p[i], q[i]);
  return d;
}

// Counter-based generator: the n-th draw of stream (seed, key) does not
// depend on how many draws other streams made.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t key)
      : key_(mix(seed ^ mix(key + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform()); }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  std::vector<double> dirichlet_ones(std::size_t n) {
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& x : w) s += (x = exponential());
    for (auto& x : w) x /= s;
    return w;
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace pdgloss

#endif // PDGLOSS_NUMERIC_HPP
