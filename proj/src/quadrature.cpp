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

#include "sphpsd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "sphpsd/common.hpp"

namespace sphpsd {

std::array<double, 3> Direction::unit_vector() const {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Direction Direction::from_vector(const std::array<double, 3>& v) {
  const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  const double theta = std::acos(std::clamp(v[2] / r, -1.0, 1.0));
  double phi = std::atan2(v[1], v[0]);
  if (phi < 0.0) phi += 2.0 * kPi;
  return {theta, phi};
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  if (count < 1) throw ArgumentError("Gauss-Legendre rule needs at least one node");
  nodes.assign(static_cast<std::size_t>(count), 0.0);
  weights.assign(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

std::vector<SpherePoint> gauss_product_grid(int n_theta) {
  std::vector<double> nodes, weights;
  gauss_legendre(n_theta, nodes, weights);
  const int n_phi = 2 * n_theta;
  std::vector<SpherePoint> grid;
  grid.reserve(static_cast<std::size_t>(n_theta * n_phi));
  for (int i = 0; i < n_theta; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      grid.push_back({{std::acos(nodes[i]), 2.0 * kPi * j / n_phi}, weights[i] * 2.0 * kPi / n_phi});
    }
  }
  return grid;
}

std::vector<SpherePoint> rotated_gauss_grid(int n_theta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  const Eigen::Matrix3d rot = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
  auto grid = gauss_product_grid(n_theta);
  for (auto& pt : grid) {
    const auto u = pt.dir.unit_vector();
    const Eigen::Vector3d r = rot * Eigen::Vector3d(u[0], u[1], u[2]);
    pt.dir = Direction::from_vector({r[0], r[1], r[2]});
  }
  return grid;
}

std::vector<Direction> fibonacci_directions(int count) {
  std::vector<Direction> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    double phi = std::fmod(golden * i, 2.0 * kPi);
    out.push_back({std::acos(z), phi});
  }
  return out;
}

double angular_distance(const Direction& a, const Direction& b) {
  const auto u = a.unit_vector();
  const auto v = b.unit_vector();
  return std::acos(std::clamp(u[0] * v[0] + u[1] * v[1] + u[2] * v[2], -1.0, 1.0));
}

}  // namespace sphpsd
