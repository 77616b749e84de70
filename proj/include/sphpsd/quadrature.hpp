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

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sphpsd {

struct Direction {
  double theta = 0.0;  // colatitude, radians
  double phi = 0.0;    // azimuth, radians

  std::array<double, 3> unit_vector() const;
  static Direction from_vector(const std::array<double, 3>& v);
};

struct SpherePoint {
  Direction dir;
  double weight = 0.0;
};

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

/// Product rule (Gauss-Legendre in cos(theta), uniform in phi) with
/// `n_theta` x `2 n_theta` points. Integrates spherical polynomials of degree
/// <= 2 n_theta - 1 exactly. Weights sum to 4 pi.
std::vector<SpherePoint> gauss_product_grid(int n_theta);

/// The same grid rigidly rotated by a random rotation drawn from `seed`.
std::vector<SpherePoint> rotated_gauss_grid(int n_theta, std::uint64_t seed);

/// Quasi-uniform spiral (Fibonacci) directions; deterministic.
std::vector<Direction> fibonacci_directions(int count);

double angular_distance(const Direction& a, const Direction& b);

}  // namespace sphpsd
