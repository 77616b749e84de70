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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphpsd/quadrature.hpp"
#include "sphpsd/special.hpp"

namespace sphpsd {

struct Microphone {
  Direction dir;
  double weight = 0.0;
};

/// Spherical microphone array: Q capsules on a sphere of radius `radius`.
struct ArrayGeometry {
  double radius = 0.042;
  ArrayKind kind = ArrayKind::Rigid;
  std::vector<Microphone> mics;

  std::size_t size() const { return mics.size(); }
  std::array<double, 3> position(std::size_t q) const;

  /// Throws ConfigError on r <= 0, empty layouts, or weights that do not sum
  /// to 4 pi within `weight_tolerance` (relative).
  void validate(double weight_tolerance = 1e-6) const;

  enum class Weighting { Equal, Exact };

  /// 32 capsules at the 12 vertices and 20 face centres of an icosahedron.
  /// `Exact` weights (5 pi / 42 and 9 pi / 70) integrate harmonics through
  /// degree 9, so the orthonormality residual vanishes up to order 4.
  static ArrayGeometry icosahedral32(double radius = 0.042, ArrayKind kind = ArrayKind::Rigid,
                                     Weighting weighting = Weighting::Exact);
};

/// |sum_q w_q Y_nm Y*_n'm' - delta| for all mode pairs up to `order`.
Eigen::MatrixXd orthonormality_error(const ArrayGeometry& geometry, int order);

/// STFT bin layout and the wavenumber of each bin.
struct FrequencyGrid {
  double sample_rate = 16000.0;
  int fft_size = 128;
  double speed_of_sound = 343.0;

  int num_bins() const { return fft_size / 2 + 1; }
  double frequency(int bin) const { return bin * sample_rate / fft_size; }
  double wavenumber(int bin) const { return 2.0 * kPi * frequency(bin) / speed_of_sound; }
};

}  // namespace sphpsd
