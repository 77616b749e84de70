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

#include "sphpsd/modal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sphpsd {

void BesselFloorPolicy::validate() const {
  if (n_min < 0) throw ConfigError("n_min must be non-negative");
  if (!(b_floor > 0.0)) throw ConfigError("b_floor must be positive");
}

int truncation_order(double k, double r, const BesselFloorPolicy& policy) {
  if (k < 0.0) throw ArgumentError("wavenumber must be non-negative");
  if (!(r > 0.0)) throw ArgumentError("radius must be positive");
  const double x = policy.rule == OrderRule::Ceil ? k * r : k * std::numbers::e * r / 2.0;
  const int n = static_cast<int>(std::ceil(x - 1e-12));
  return std::max(n, policy.n_min);
}

int active_order(double k, double r, const BesselFloorPolicy& policy, int max_order) {
  if (max_order < 0) throw ConfigError("max_order must be non-negative");
  return std::min(truncation_order(k, r, policy), max_order);
}

double activation_wavenumber_a(int n, double r) { return 2.0 * (n - 1) / (std::numbers::e * r); }
double activation_wavenumber_b(int n, double r) { return (n - 1) / r; }

cplx bn_value(int n, double kr, ArrayKind kind) {
  if (kr == 0.0) return n == 0 ? cplx{1.0, 0.0} : cplx{};
  return bn_radial(n, kr, kind);
}

cplx floored_bn(int n, double k, const ArrayGeometry& geometry, const BesselFloorPolicy& policy) {
  const double r = geometry.radius;
  const cplx b = bn_value(n, k * r, geometry.kind);
  if (!policy.enabled || n == 0) return b;
  const double floor =
      n <= policy.n_min ? policy.b_floor : std::abs(bn_value(n, activation_wavenumber_b(n, r) * r, geometry.kind));
  const double mag = std::abs(b);
  if (mag >= floor) return b;
  if (mag == 0.0) return {floor, 0.0};
  return b * (floor / mag);
}

ModalEncoder::ModalEncoder(const ArrayGeometry& geometry, const FrequencyGrid& grid,
                           const BesselFloorPolicy& policy, int max_order)
    : max_order_(max_order), channels_(static_cast<int>(geometry.size())) {
  policy.validate();
  const int q_count = channels_;
  std::vector<std::vector<cplx>> y_conj(static_cast<std::size_t>(q_count));
  for (int q = 0; q < q_count; ++q) {
    auto y = sph_harmonics_all(max_order, geometry.mics[q].dir.theta, geometry.mics[q].dir.phi);
    for (auto& v : y) v = std::conj(v) * geometry.mics[q].weight;
    y_conj[q] = std::move(y);
  }
  for (int b = 0; b < grid.num_bins(); ++b) {
    const double k = grid.wavenumber(b);
    const int order = active_order(k, geometry.radius, policy, max_order);
    if (q_count < num_modes(order)) {
      throw ConfigError("bin " + std::to_string(b) + " needs order " + std::to_string(order) + " but only " +
                        std::to_string(q_count) + " microphones are available (Q >= (N+1)^2)");
    }
    Eigen::MatrixXcd e(num_modes(order), q_count);
    for (int n = 0; n <= order; ++n) {
      // A mode with zero strength (DC without floors) is unobservable.
      const cplx bn = floored_bn(n, k, geometry, policy);
      const cplx inv_b = bn == cplx{} ? cplx{} : 1.0 / bn;
      for (int m = -n; m <= n; ++m) {
        const int a = acn_index({n, m});
        for (int q = 0; q < q_count; ++q) e(a, q) = y_conj[q][a] * inv_b;
      }
    }
    orders_.push_back(order);
    matrices_.push_back(std::move(e));
  }
}

void ModalEncoder::encode(int bin, const cplx* pressures, cplx* alpha) const {
  const auto& e = matrices_[bin];
  Eigen::Map<const Eigen::VectorXcd> p(pressures, channels_);
  Eigen::Map<Eigen::VectorXcd> out(alpha, num_modes(max_order_));
  out.setZero();
  out.head(e.rows()).noalias() = e * p;
}

ModalFrames modal_coefficients(const StftSpectra& spectra, const ArrayGeometry& geometry, const FrequencyGrid& grid,
                               const BesselFloorPolicy& policy, int max_order) {
  if (spectra.channels != static_cast<int>(geometry.size())) {
    throw ArgumentError("spectra have " + std::to_string(spectra.channels) + " channels but the array has " +
                        std::to_string(geometry.size()) + " microphones");
  }
  if (spectra.bins != grid.num_bins()) throw ArgumentError("frequency grid does not match the spectra");
  const ModalEncoder encoder(geometry, grid, policy, max_order);
  ModalFrames out;
  out.frames = spectra.frames;
  out.bins = spectra.bins;
  out.max_order = max_order;
  for (int b = 0; b < spectra.bins; ++b) out.order.push_back(encoder.order(b));
  out.data.assign(static_cast<std::size_t>(out.frames) * out.bins * out.modes(), cplx{});
  for (int t = 0; t < spectra.frames; ++t) {
    for (int b = 0; b < spectra.bins; ++b) encoder.encode(b, &spectra.data[spectra.offset(t, b)], &out.at(t, b, 0));
  }
  return out;
}

}  // namespace sphpsd
