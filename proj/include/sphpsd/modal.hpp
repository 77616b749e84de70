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

#include <vector>

#include <Eigen/Dense>

#include "sphpsd/geometry.hpp"
#include "sphpsd/stft.hpp"

namespace sphpsd {

/// Order rule: `ExpHalf` is N = ceil(k e r / 2), `Ceil` is N = ceil(k r).
enum class OrderRule { ExpHalf, Ceil };

struct BesselFloorPolicy {
  int n_min = 2;
  double b_floor = 0.05;
  bool enabled = true;
  OrderRule rule = OrderRule::ExpHalf;

  void validate() const;
};

/// max(N, n_min) with N from the policy's order rule.
int truncation_order(double k, double r, const BesselFloorPolicy& policy);

/// truncation_order() capped at `max_order`.
int active_order(double k, double r, const BesselFloorPolicy& policy, int max_order);

/// Wavenumbers at which order n enters under the two order rules
/// N = ceil(k e r / 2) and N = ceil(k r).
double activation_wavenumber_a(int n, double r);
double activation_wavenumber_b(int n, double r);

/// b_n with the DC limit (b_0 = 1, b_n = 0) at k = 0.
cplx bn_value(int n, double kr, ArrayKind kind);

/// Mode strength with magnitude floors applied; phase is kept.
cplx floored_bn(int n, double k, const ArrayGeometry& geometry, const BesselFloorPolicy& policy);

/// Sound-field coefficients, stored frame-major, then bin, then ACN mode.
/// Every bin reserves (max_order + 1)^2 slots; modes above the bin's order
/// are zero.
struct ModalFrames {
  int frames = 0;
  int bins = 0;
  int max_order = 0;
  std::vector<int> order;
  std::vector<cplx> data;

  int modes() const { return num_modes(max_order); }
  std::size_t offset(int frame, int bin) const {
    return (static_cast<std::size_t>(frame) * bins + bin) * modes();
  }
  cplx& at(int frame, int bin, int acn) { return data[offset(frame, bin) + acn]; }
  const cplx& at(int frame, int bin, int acn) const { return data[offset(frame, bin) + acn]; }
};

/// Per-bin linear map from capsule pressures to alpha_nm.
class ModalEncoder {
 public:
  ModalEncoder(const ArrayGeometry& geometry, const FrequencyGrid& grid, const BesselFloorPolicy& policy,
               int max_order);

  int bins() const { return static_cast<int>(matrices_.size()); }
  int max_order() const { return max_order_; }
  int order(int bin) const { return orders_[bin]; }
  const Eigen::MatrixXcd& matrix(int bin) const { return matrices_[bin]; }

  /// `alpha` receives num_modes(max_order) values.
  void encode(int bin, const cplx* pressures, cplx* alpha) const;

 private:
  int max_order_;
  int channels_;
  std::vector<int> orders_;
  std::vector<Eigen::MatrixXcd> matrices_;
};

ModalFrames modal_coefficients(const StftSpectra& spectra, const ArrayGeometry& geometry, const FrequencyGrid& grid,
                               const BesselFloorPolicy& policy, int max_order = 4);

}  // namespace sphpsd
