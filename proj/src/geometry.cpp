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

#include "sphpsd/geometry.hpp"

#include <cmath>

namespace sphpsd {

std::array<double, 3> ArrayGeometry::position(std::size_t q) const {
  auto u = mics.at(q).dir.unit_vector();
  for (auto& c : u) c *= radius;
  return u;
}

void ArrayGeometry::validate(double weight_tolerance) const {
  if (!(radius > 0.0)) throw ConfigError("array radius must be positive");
  if (mics.empty()) throw ConfigError("array has no microphones");
  double total = 0.0;
  for (const auto& mic : mics) {
    if (mic.dir.theta < 0.0 || mic.dir.theta > kPi) throw ConfigError("microphone colatitude outside [0, pi]");
    total += mic.weight;
  }
  if (std::abs(total - kFourPi) > weight_tolerance * kFourPi) {
    throw ConfigError("microphone weights sum to " + std::to_string(total) + ", expected 4 pi");
  }
}

ArrayGeometry ArrayGeometry::icosahedral32(double radius, ArrayKind kind, Weighting weighting) {
  const double g = std::numbers::phi;
  std::vector<std::array<double, 3>> vertices;
  for (double a : {-1.0, 1.0}) {
    for (double b : {-1.0, 1.0}) {
      vertices.push_back({0.0, a, b * g});
      vertices.push_back({a, b * g, 0.0});
      vertices.push_back({b * g, 0.0, a});
    }
  }
  auto dist2 = [](const std::array<double, 3>& p, const std::array<double, 3>& q) {
    return (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) + (p[2] - q[2]) * (p[2] - q[2]);
  };
  // Edge length of this icosahedron is 2.
  auto is_edge = [&](int i, int j) { return std::abs(dist2(vertices[i], vertices[j]) - 4.0) < 1e-9; };

  ArrayGeometry geo;
  geo.radius = radius;
  geo.kind = kind;
  const double w_vertex = weighting == Weighting::Exact ? 5.0 * kPi / 42.0 : kFourPi / 32.0;
  const double w_face = weighting == Weighting::Exact ? 9.0 * kPi / 70.0 : kFourPi / 32.0;
  for (const auto& v : vertices) geo.mics.push_back({Direction::from_vector(v), w_vertex});
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) {
      if (!is_edge(i, j)) continue;
      for (int k = j + 1; k < 12; ++k) {
        if (!is_edge(i, k) || !is_edge(j, k)) continue;
        std::array<double, 3> c{};
        for (int d = 0; d < 3; ++d) c[d] = vertices[i][d] + vertices[j][d] + vertices[k][d];
        geo.mics.push_back({Direction::from_vector(c), w_face});
      }
    }
  }
  return geo;
}

Eigen::MatrixXd orthonormality_error(const ArrayGeometry& geometry, int order) {
  const int modes = num_modes(order);
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(modes, modes);
  for (const auto& mic : geometry.mics) {
    const auto y = sph_harmonics_all(order, mic.dir.theta, mic.dir.phi);
    for (int a = 0; a < modes; ++a) {
      for (int b = 0; b < modes; ++b) gram(a, b) += mic.weight * y[a] * std::conj(y[b]);
    }
  }
  return (gram - Eigen::MatrixXcd::Identity(modes, modes)).cwiseAbs();
}

}  // namespace sphpsd
