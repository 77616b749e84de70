// Copyright 2026 The sphpsd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sphpsd/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>

namespace sphpsd {

void validate(const ModeIndex& idx) {
  if (idx.n < 0 || std::abs(idx.m) > idx.n) {
    throw ArgumentError("invalid mode index (n=" + std::to_string(idx.n) +
                        ", m=" + std::to_string(idx.m) + ")");
  }
}

ModeIndex mode_from_acn(int acn) {
  if (acn < 0) throw ArgumentError("negative ACN index");
  const int n = static_cast<int>(std::floor(std::sqrt(static_cast<double>(acn))));
  return {n, acn - n * n - n};
}

namespace {

// Normalized associated Legendre values P[n][m] (m >= 0) such that
// Y_nm = P[n][m] * exp(i m phi), Condon-Shortley phase included.
std::vector<double> normalized_legendre(int order, double theta) {
  const int stride = order + 1;
  std::vector<double> p(static_cast<std::size_t>(stride * stride), 0.0);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  p[0] = 1.0 / std::sqrt(kFourPi);
  for (int m = 1; m <= order; ++m) {
    p[m * stride + m] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[(m - 1) * stride + (m - 1)];
  }
  for (int m = 0; m < order; ++m) {
    p[(m + 1) * stride + m] = std::sqrt(2.0 * m + 3.0) * x * p[m * stride + m];
  }
  for (int m = 0; m <= order; ++m) {
    for (int n = m + 2; n <= order; ++n) {
      const double a = std::sqrt((4.0 * n * n - 1.0) / (static_cast<double>(n) * n - m * m));
      const double b = std::sqrt(((n - 1.0) * (n - 1.0) - m * m) / (4.0 * (n - 1.0) * (n - 1.0) - 1.0));
      p[n * stride + m] = a * (x * p[(n - 1) * stride + m] - b * p[(n - 2) * stride + m]);
    }
  }
  return p;
}

}  // namespace

std::vector<cplx> sph_harmonics_all(int order, double theta, double phi) {
  if (order < 0) throw ArgumentError("negative harmonic order");
  const auto p = normalized_legendre(order, theta);
  const int stride = order + 1;
  std::vector<cplx> out(static_cast<std::size_t>(num_modes(order)));
  for (int n = 0; n <= order; ++n) {
    for (int m = 0; m <= n; ++m) {
      const cplx y = p[n * stride + m] * std::polar(1.0, m * phi);
      out[acn_index({n, m})] = y;
      if (m > 0) out[acn_index({n, -m})] = minus_one_pow(m) * std::conj(y);
    }
  }
  return out;
}

cplx sph_harmonic(const ModeIndex& idx, double theta, double phi) {
  validate(idx);
  if (theta < 0.0 || theta > kPi) throw ArgumentError("colatitude outside [0, pi]");
  return sph_harmonics_all(idx.n, theta, phi)[acn_index(idx)];
}

// ---------------------------------------------------------------------------
// Spherical Bessel functions

namespace {

double j0_exact(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }
double j1_exact(double x) {
  if (x == 0.0) return 0.0;
  if (x < 1e-3) return x / 3.0 - x * x * x / 30.0;
  return std::sin(x) / (x * x) - std::cos(x) / x;
}

double j_series(int n, double x) {
  // x^n / (2n+1)!! * sum_k (-x^2/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1))
  double lead = 1.0;
  for (int k = 1; k <= n; ++k) lead *= x / (2.0 * k + 1.0);
  double term = 1.0;
  double sum = 1.0;
  const double h = -0.5 * x * x;
  for (int k = 1; k < 60; ++k) {
    term *= h / (k * (2.0 * n + 2.0 * k + 1.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return lead * sum;
}

}  // namespace

std::vector<double> sph_bessel_j_all(int order, double x) {
  if (order < 0) throw ArgumentError("negative Bessel order");
  if (x < 0.0) throw DomainError("spherical Bessel j_n needs x >= 0");
  std::vector<double> j(static_cast<std::size_t>(order + 1), 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  if (x < 1.0) {
    for (int n = 0; n <= order; ++n) j[n] = j_series(n, x);
    return j;
  }
  j[0] = j0_exact(x);
  if (order >= 1) j[1] = j1_exact(x);
  // Upward recurrence is stable while the order stays below x.
  const int up_limit = std::min(order, static_cast<int>(x));
  for (int n = 1; n < up_limit; ++n) j[n + 1] = (2.0 * n + 1.0) / x * j[n] - j[n - 1];
  if (up_limit >= order) return j;

  // Miller's downward recurrence for the remaining orders, normalized against
  // whichever of j0, j1 is larger in magnitude.
  const int start = order + 20 + static_cast<int>(std::sqrt(40.0 * order));
  std::vector<double> f(static_cast<std::size_t>(start + 2), 0.0);
  f[start + 1] = 0.0;
  f[start] = 1e-30;
  for (int n = start; n >= 1; --n) {
    f[n - 1] = (2.0 * n + 1.0) / x * f[n] - f[n + 1];
    if (std::abs(f[n - 1]) > 1e250) {
      for (int k = n - 1; k <= start; ++k) f[k] *= 1e-250;
    }
  }
  const double scale = std::abs(j[0]) >= std::abs(j1_exact(x)) ? j0_exact(x) / f[0] : j1_exact(x) / f[1];
  for (int n = up_limit + 1; n <= order; ++n) j[n] = f[n] * scale;
  return j;
}

double sph_bessel_j(int n, double x) { return sph_bessel_j_all(n, x)[static_cast<std::size_t>(n)]; }

double sph_bessel_y(int n, double x) {
  if (n < 0) throw ArgumentError("negative Bessel order");
  if (!(x > 0.0)) throw DomainError("spherical Neumann y_n needs x > 0");
  double y0 = -std::cos(x) / x;
  if (n == 0) return y0;
  double y1 = -std::cos(x) / (x * x) - std::sin(x) / x;
  for (int k = 1; k < n; ++k) {
    const double y2 = (2.0 * k + 1.0) / x * y1 - y0;
    y0 = y1;
    y1 = y2;
  }
  return y1;
}

cplx sph_hankel1(int n, double x) {
  if (!(x > 0.0)) throw DomainError("spherical Hankel h_n needs x > 0");
  return {sph_bessel_j(n, x), sph_bessel_y(n, x)};
}

double sph_bessel_j_deriv(int n, double x) {
  if (n < 0) throw ArgumentError("negative Bessel order");
  if (x == 0.0) return n == 1 ? 1.0 / 3.0 : 0.0;
  const auto j = sph_bessel_j_all(n + 1, x);
  if (n == 0) return -j[1];
  return j[n - 1] - (n + 1.0) / x * j[n];
}

double sph_bessel_y_deriv(int n, double x) {
  if (n == 0) return -sph_bessel_y(1, x);
  return sph_bessel_y(n - 1, x) - (n + 1.0) / x * sph_bessel_y(n, x);
}

cplx sph_hankel1_deriv(int n, double x) {
  if (!(x > 0.0)) throw DomainError("spherical Hankel h_n needs x > 0");
  return {sph_bessel_j_deriv(n, x), sph_bessel_y_deriv(n, x)};
}

cplx bn_radial(int n, double kr, ArrayKind kind) {
  if (n < 0) throw ArgumentError("negative mode order");
  if (kr < 0.0) throw DomainError("b_n needs kr >= 0");
  if (kind == ArrayKind::Open) return {sph_bessel_j(n, kr), 0.0};
  if (kr == 0.0) throw DomainError("rigid-sphere b_n is undefined at kr = 0");
  // Wronskian j y' - j' y = 1/x^2 collapses j - (j'/h2') h2 to -i/(x^2 h2').
  const cplx h2_deriv = std::conj(sph_hankel1_deriv(n, kr));
  return cplx{0.0, -1.0} / (kr * kr * h2_deriv);
}

// ---------------------------------------------------------------------------
// Wigner 3j and Gaunt constants

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int factorial(int n) {
  cpp_int f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double wigner3j_uncached(int j1, int j2, int j3, int m1, int m2, int m3) {
  const int t_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int t_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  cpp_rational sum = 0;
  for (int t = t_min; t <= t_max; ++t) {
    const cpp_int denom = factorial(t) * factorial(j3 - j2 + t + m1) * factorial(j3 - j1 + t - m2) *
                          factorial(j1 + j2 - j3 - t) * factorial(j1 - t - m1) * factorial(j2 - t + m2);
    cpp_rational term(cpp_int(1), denom);
    if (t % 2 != 0) term = -term;
    sum += term;
  }
  if (sum == 0) return 0.0;
  const cpp_rational triangle(factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3),
                              factorial(j1 + j2 + j3 + 1));
  const cpp_int moments = factorial(j1 + m1) * factorial(j1 - m1) * factorial(j2 + m2) *
                          factorial(j2 - m2) * factorial(j3 + m3) * factorial(j3 - m3);
  const cpp_rational squared = triangle * cpp_rational(moments) * sum * sum;
  const double magnitude = std::sqrt(static_cast<double>(squared));
  const double sign = (sum > 0 ? 1.0 : -1.0) * minus_one_pow(j1 - j2 - m3);
  return sign * magnitude;
}

std::uint64_t pack_key(int j1, int j2, int j3, int m1, int m2, int m3) {
  std::uint64_t key = 0;
  for (int v : {j1, j2, j3, m1 + 128, m2 + 128, m3 + 128}) key = (key << 9) | static_cast<std::uint64_t>(v);
  return key;
}

struct Wigner3jCache {
  std::shared_mutex mutex;
  std::unordered_map<std::uint64_t, double> values;
};

Wigner3jCache& cache() {
  static Wigner3jCache instance;
  return instance;
}

}  // namespace

double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (j1 < 0 || j2 < 0 || j3 < 0) throw ArgumentError("negative angular momentum in 3j symbol");
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (m1 + m2 + m3 != 0) return 0.0;
  if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;
  if (j1 > 127 || j2 > 127 || j3 > 127) return wigner3j_uncached(j1, j2, j3, m1, m2, m3);

  const auto key = pack_key(j1, j2, j3, m1, m2, m3);
  auto& c = cache();
  {
    std::shared_lock lock(c.mutex);
    if (auto it = c.values.find(key); it != c.values.end()) return it->second;
  }
  const double value = wigner3j_uncached(j1, j2, j3, m1, m2, m3);
  std::unique_lock lock(c.mutex);
  c.values.emplace(key, value);
  return value;
}

double gaunt_w(int v, int u, int n, int m, int np, int mp) {
  validate({v, u});
  validate({n, m});
  validate({np, mp});
  if (u - m + mp != 0) return 0.0;
  if (v > n + np || v < std::abs(n - np) || (v + n + np) % 2 != 0) return 0.0;
  const double pref = std::sqrt((2.0 * v + 1.0) * (2.0 * n + 1.0) * (2.0 * np + 1.0) / kFourPi);
  return minus_one_pow(m) * pref * wigner3j(v, n, np, 0, 0, 0) * wigner3j(v, n, np, u, -m, mp);
}

}  // namespace sphpsd
