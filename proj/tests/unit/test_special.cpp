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

#include <cmath>
#include <complex>

#include <catch_amalgamated.hpp>

#include "sphpsd/quadrature.hpp"
#include "sphpsd/special.hpp"

using namespace sphpsd;
using Catch::Approx;

namespace {

long double fact(int n) {
  long double f = 1.0L;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Direct summation in extended precision.
double threej_sum(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0 || j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  long double s = 0.0L;
  for (int z = 0; z <= j1 + j2 + j3 + 1; ++z) {
    const int a[6] = {z, j1 + j2 - j3 - z, j1 - m1 - z, j2 + m2 - z, j3 - j2 + m1 + z, j3 - j1 - m2 + z};
    bool ok = true;
    long double d = 1.0L;
    for (int v : a) {
      if (v < 0) ok = false;
      else d *= fact(v);
    }
    if (ok) s += ((z % 2) ? -1.0L : 1.0L) / d;
  }
  const long double delta = fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3) / fact(j1 + j2 + j3 + 1);
  const long double mom = fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) * fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3);
  const int p = j1 - j2 - m3;
  return static_cast<double>(((p % 2) ? -1.0L : 1.0L) * std::sqrt(delta * mom) * s);
}

}  // namespace

TEST_CASE("spherical harmonic values and symmetry") {
  CHECK(std::abs(sph_harmonic({0, 0}, 0.7, 2.1) - cplx(0.28209479177387814, 0.0)) < 1e-12);
  CHECK(std::abs(sph_harmonic({1, 0}, 0.0, 0.0) - cplx(0.4886025119029199, 0.0)) < 1e-12);
  for (double th : {0.0, 0.3, 1.2, 2.5, kPi}) {
    CHECK(sph_harmonic({1, 0}, th, 1.0).real() == Approx(std::sqrt(3.0 / kFourPi) * std::cos(th)).margin(1e-14));
    const cplx y11 = -std::sqrt(3.0 / (8.0 * kPi)) * std::sin(th) * std::exp(cplx(0.0, 0.4));
    CHECK(std::abs(sph_harmonic({1, 1}, th, 0.4) - y11) < 1e-14);
    const cplx y22 = 0.25 * std::sqrt(15.0 / (2.0 * kPi)) * std::sin(th) * std::sin(th) * std::exp(cplx(0.0, 0.8));
    CHECK(std::abs(sph_harmonic({2, 2}, th, 0.4) - y22) < 1e-14);
  }
  CHECK(std::abs(sph_harmonic({1, -1}, 1.0, 0.5) + std::conj(sph_harmonic({1, 1}, 1.0, 0.5))) < 1e-12);
  for (int n = 0; n <= 6; ++n) {
    for (int m = -n; m <= n; ++m) {
      for (double th : {0.1, 0.9, 2.0, 3.0}) {
        const cplx lhs = std::conj(sph_harmonic({n, m}, th, 1.3));
        const cplx rhs = minus_one_pow(m) * sph_harmonic({n, -m}, th, 1.3);
        CHECK(std::abs(lhs - rhs) < 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(sph_harmonic({1, 2}, 0.1, 0.1), ArgumentError);
  CHECK_THROWS_AS(sph_harmonic({1, 0}, -0.1, 0.1), ArgumentError);
}

TEST_CASE("harmonics are orthonormal under an exact product rule") {
  const auto grid = gauss_product_grid(8);
  const int order = 6;
  std::vector<std::vector<cplx>> ys;
  for (const auto& p : grid) ys.push_back(sph_harmonics_all(order, p.dir.theta, p.dir.phi));
  double worst = 0.0;
  for (int a = 0; a < num_modes(order); ++a) {
    for (int b = 0; b < num_modes(order); ++b) {
      cplx s = 0.0;
      for (std::size_t q = 0; q < grid.size(); ++q) s += grid[q].weight * ys[q][a] * std::conj(ys[q][b]);
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("acn indexing") {
  CHECK(acn_index({0, 0}) == 0);
  CHECK(acn_index({1, -1}) == 1);
  CHECK(acn_index({4, 4}) == 24);
  for (int i = 0; i < 49; ++i) CHECK(acn_index(mode_from_acn(i)) == i);
}

TEST_CASE("spherical Bessel functions") {
  CHECK(sph_bessel_j(0, 0.0) == 1.0);
  CHECK(std::abs(sph_bessel_j(0, kPi)) < 1e-12);
  const double x = 0.003;
  CHECK(sph_bessel_j(1, x) == Approx(x / 3.0 - x * x * x / 30.0).epsilon(1e-12));
  CHECK(sph_bessel_j(1, x) == Approx(0.0009999991).epsilon(1e-9));
  for (double z : {0.5, 1.0, 3.0, 7.5, 20.0, 120.0, 200.0}) {
    const double j2 = (3.0 / (z * z) - 1.0) * std::sin(z) / z - 3.0 * std::cos(z) / (z * z);
    CHECK(sph_bessel_j(2, z) == Approx(j2).margin(1e-13));
    const double y2 = -(3.0 / (z * z) - 1.0) * std::cos(z) / z - 3.0 * std::sin(z) / (z * z);
    CHECK(sph_bessel_y(2, z) == Approx(y2).margin(1e-12));
  }
  // Small argument against the leading power term, high orders.
  CHECK(sph_bessel_j(10, 0.5) == Approx(std::pow(0.5, 10) / 13749310575.0 * (1.0 - 0.25 / (2.0 * 23.0) + 0.0625 / (8.0 * 23.0 * 25.0))).epsilon(1e-7));
  // Downward recurrence region: compare with the Wronskian j_n y_{n-1} - j_{n-1} y_n = 1/x^2.
  for (int n = 1; n <= 10; ++n) {
    for (double z : {0.8, 2.0, 5.0, 9.0, 40.0, 200.0}) {
      const double w = sph_bessel_j(n, z) * sph_bessel_y(n - 1, z) - sph_bessel_j(n - 1, z) * sph_bessel_y(n, z);
      CHECK(w * z * z == Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("spherical Hankel functions and derivatives") {
  const cplx h0 = sph_hankel1(0, 1.0);
  const cplx oracle = cplx(0.0, -1.0) * std::exp(cplx(0.0, 1.0)) / 1.0;
  CHECK(std::abs(h0 - oracle) < 1e-14);
  CHECK(h0.real() == Approx(0.8414710).epsilon(1e-7));
  CHECK(h0.imag() == Approx(-0.5403023).epsilon(1e-7));
  const double eps = 1e-6;
  const double fd = (sph_bessel_j(0, 1.0 + eps) - sph_bessel_j(0, 1.0 - eps)) / (2 * eps);
  CHECK(std::abs(sph_bessel_j_deriv(0, 1.0) - fd) < 1e-6);
  const cplx rec = sph_hankel1_deriv(1, 2.0) - (sph_hankel1(0, 2.0) - (2.0 / 2.0) * sph_hankel1(1, 2.0));
  CHECK(std::abs(rec) < 1e-12);
  for (int n = 0; n <= 6; ++n) {
    for (double z : {0.4, 1.7, 6.0}) {
      const cplx d = (sph_hankel1(n, z + eps) - sph_hankel1(n, z - eps)) / (2 * eps);
      CHECK(std::abs(sph_hankel1_deriv(n, z) - d) < 1e-5 * std::max(1.0, std::abs(d)));
    }
  }
  CHECK_THROWS_AS(sph_hankel1(0, 0.0), DomainError);
}

TEST_CASE("mode strength b_n") {
  CHECK(bn_radial(0, 0.0, ArrayKind::Open) == cplx(1.0, 0.0));
  CHECK(bn_radial(1, 0.0, ArrayKind::Open) == cplx(0.0, 0.0));
  CHECK_THROWS_AS(bn_radial(0, 0.0, ArrayKind::Rigid), DomainError);

  // Closed forms at n = 0: j0 = sin x / x, y0 = -cos x / x, derivatives -j1, -y1.
  const double x = kPi;
  const double j0 = std::sin(x) / x;
  const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  const double y0 = -std::cos(x) / x;
  const double y1 = -std::cos(x) / (x * x) - std::sin(x) / x;
  const cplx h = {j0, y0};
  const cplx hd = {-j1, -y1};
  const cplx textbook = j0 - (-j1 / hd) * h;
  const cplx b0 = bn_radial(0, x, ArrayKind::Rigid);
  CHECK(std::abs(b0) > 0.1);
  // The library uses the e^{+iwt} convention, i.e. the conjugate scattering solution.
  CHECK(std::abs(b0 - std::conj(textbook)) < 1e-12);

  for (int n = 0; n <= 5; ++n) {
    for (double z : {0.3, 1.0, 2.5, 7.0, 15.0}) {
      const cplx hh = sph_hankel1(n, z);
      const cplx tb = sph_bessel_j(n, z) - sph_bessel_j_deriv(n, z) / sph_hankel1_deriv(n, z) * hh;
      CHECK(std::abs(bn_radial(n, z, ArrayKind::Rigid) - std::conj(tb)) < 1e-10 * std::max(1.0, std::abs(tb)));
    }
  }
  double min_mag = 1e9;
  for (int n = 0; n <= 5; ++n) {
    for (double z = 0.01; z <= 30.0; z += 0.01) min_mag = std::min(min_mag, std::abs(bn_radial(n, z, ArrayKind::Rigid)));
  }
  CHECK(min_mag > 0.0);
}

TEST_CASE("wigner 3j symbols") {
  CHECK(wigner3j(0, 0, 0, 0, 0, 0) == Approx(1.0));
  CHECK(wigner3j(1, 1, 0, 0, 0, 0) == Approx(-0.5773503).epsilon(1e-7));
  CHECK(wigner3j(1, 2, 5, 0, 0, 0) == 0.0);
  CHECK(wigner3j(2, 2, 2, 1, 1, -1) == 0.0);
  double worst = 0.0;
  for (int j1 = 0; j1 <= 8; ++j1)
    for (int j2 = 0; j2 <= 8; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(8, j1 + j2); ++j3)
        for (int m1 = -j1; m1 <= j1; ++m1)
          for (int m2 = -j2; m2 <= j2; ++m2) {
            const int m3 = -m1 - m2;
            if (std::abs(m3) > j3) continue;
            worst = std::max(worst, std::abs(wigner3j(j1, j2, j3, m1, m2, m3) - threej_sum(j1, j2, j3, m1, m2, m3)));
          }
  CHECK(worst < 1e-10);
  for (int j1 = 0; j1 <= 6; ++j1)
    for (int j2 = 0; j2 <= 6; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3)
        for (int m3 = -j3; m3 <= j3; ++m3) {
          double s = 0.0;
          for (int m1 = -j1; m1 <= j1; ++m1) {
            const double w = wigner3j(j1, j2, j3, m1, -m1 - m3, m3);
            s += w * w;
          }
          CHECK(s * (2 * j3 + 1) == Approx(1.0).epsilon(1e-10));
        }
}

TEST_CASE("gaunt constants match quadrature of the triple product") {
  CHECK(gaunt_w(0, 0, 0, 0, 0, 0) == Approx(0.28209479177387814).epsilon(1e-12));
  CHECK(gaunt_w(1, 1, 1, 0, 1, 0) == 0.0);
  CHECK(gaunt_w(3, 0, 1, 0, 1, 0) == 0.0);
  const auto grid = gauss_product_grid(8);
  const int order = 4;
  std::vector<std::vector<cplx>> ys;
  for (const auto& p : grid) ys.push_back(sph_harmonics_all(order, p.dir.theta, p.dir.phi));
  double worst = 0.0;
  for (int a = 0; a < num_modes(order); ++a)
    for (int b = 0; b < num_modes(order); ++b)
      for (int c = 0; c < num_modes(order); ++c) {
        cplx s = 0.0;
        for (std::size_t q = 0; q < grid.size(); ++q) s += grid[q].weight * ys[q][a] * std::conj(ys[q][b]) * ys[q][c];
        const auto v = mode_from_acn(a), n = mode_from_acn(b), np = mode_from_acn(c);
        worst = std::max(worst, std::abs(s - gaunt_w(v.n, v.m, n.n, n.m, np.n, np.m)));
      }
  CHECK(worst < 1e-8);
}
