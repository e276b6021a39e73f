#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace covkit {

using Rng = std::mt19937_64;

/// Derives a child seed from (master, index) with a splitmix64 finalizer.
/// Used everywhere a replication stream is split off a master seed, so that
/// sweeps are reproducible without correlated streams.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t index = 0) {
  return Rng(mix_seed(seed, index));
}

// The std:: distributions are implementation-defined, which would break
// byte-identical replays across standard libraries. All sampling below is
// spelled out explicitly on top of the (fully specified) mt19937_64 stream.

/// Uniform in [0,1) with 53-bit resolution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n).
inline int uniform_int(Rng& rng, int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  int v = static_cast<int>(uniform01(rng) * n);
  return v < n ? v : n - 1;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Samples an index proportionally to nonnegative weights w[0..n-1].
/// Weights need not be normalized; a zero-total vector is an error.
inline int sample_index(Rng& rng, const double* w, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[i];
  if (!(total > 0.0)) throw std::invalid_argument("sample_index: zero total weight");
  double u = uniform01(rng) * total;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return n - 1;  // guards against accumulated round-off at u ~ total
}

inline int sample_index(Rng& rng, const std::vector<double>& w) {
  return sample_index(rng, w.data(), static_cast<int>(w.size()));
}

/// Standard normal via the Marsaglia polar method.
inline double normal01(Rng& rng) {
  double u, v, s;
  do {
    u = 2.0 * uniform01(rng) - 1.0;
    v = 2.0 * uniform01(rng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

/// Gamma(shape, 1) via Marsaglia–Tsang squeeze.
inline double gamma_sample(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma_sample: shape must be positive");
  if (shape < 1.0) {
    double u = uniform01(rng);
    while (u == 0.0) u = uniform01(rng);
    return gamma_sample(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal01(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Dirichlet(alpha, ..., alpha) row of length n.
inline std::vector<double> dirichlet(Rng& rng, int n, double alpha) {
  std::vector<double> row(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    row[i] = gamma_sample(rng, alpha);
    total += row[i];
  }
  if (total <= 0.0) {  // vanishingly unlikely; fall back to uniform
    for (int i = 0; i < n; ++i) row[i] = 1.0 / n;
    return row;
  }
  for (int i = 0; i < n; ++i) row[i] /= total;
  return row;
}

}  // namespace covkit
