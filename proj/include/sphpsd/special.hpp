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

// Special-function kernel: spherical harmonics, spherical Bessel/Hankel
// functions, the array mode strength b_n, Wigner-3j symbols and the Gaunt
// constants of triple harmonic products.
//
// Conventions
//   * Y_nm are orthonormal complex harmonics with the Condon-Shortley phase,
//     so that Y*_nm = (-1)^m Y_n(-m).
//   * Time dependence is e^{+i w t}, matching the analysis STFT. A plane wave
//     arriving from direction y is e^{+i k y.x}; outgoing radiation is carried
//     by h^(2)_n = conj(h^(1)_n). sph_hankel1() returns h^(1)_n, and the rigid
//     mode strength uses its outgoing counterpart.

#pragma once

#include <cstddef>
#include <vector>

#include "sphpsd/common.hpp"

namespace sphpsd {

struct ModeIndex {
  int n = 0;
  int m = 0;

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

enum class ArrayKind { Open, Rigid };

/// Throws ArgumentError unless n >= 0 and |m| <= n.
void validate(const ModeIndex& idx);

/// Linear (ACN) index n^2 + n + m.
inline int acn_index(const ModeIndex& idx) { return idx.n * idx.n + idx.n + idx.m; }
ModeIndex mode_from_acn(int acn);
inline int num_modes(int order) { return (order + 1) * (order + 1); }

cplx sph_harmonic(const ModeIndex& idx, double theta, double phi);

/// All Y_nm(theta, phi) for n <= order in ACN order.
std::vector<cplx> sph_harmonics_all(int order, double theta, double phi);

/// Spherical Bessel function of the first kind j_n(x), x >= 0.
double sph_bessel_j(int n, double x);
/// Spherical Neumann function y_n(x), x > 0.
double sph_bessel_y(int n, double x);
/// h^(1)_n(x) = j_n(x) + i y_n(x), x > 0.
cplx sph_hankel1(int n, double x);

double sph_bessel_j_deriv(int n, double x);
double sph_bessel_y_deriv(int n, double x);
cplx sph_hankel1_deriv(int n, double x);

/// j_0..j_order at x in one pass.
std::vector<double> sph_bessel_j_all(int order, double x);

/// Mode strength b_n(kr). Open: j_n. Rigid: j_n - (j'_n / h'_n) h_n with the
/// outgoing Hankel function, evaluated through the Wronskian as
/// -i / (x^2 h^(2)'_n(x)).
cplx bn_radial(int n, double kr, ArrayKind kind);

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3), evaluated with exact rational
/// arithmetic and converted to double at the end. Memoized, thread-safe.
double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3);

/// W_{v,n,n'}^{u,m,m'} = integral over the sphere of Y_vu Y*_nm Y_n'm'.
double gaunt_w(int v, int u, int n, int m, int np, int mp);

}  // namespace sphpsd
