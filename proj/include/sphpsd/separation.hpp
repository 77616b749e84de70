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

#include "sphpsd/estimator.hpp"

namespace sphpsd {

enum class BeamformerKind { MaxDirectivity, DelaySum };

/// Modal weight d_n. MD: i^{-n} / (N+1)^2. DS: 4 pi |b_n(kr)|^2 / i^n.
cplx beam_weight(BeamformerKind kind, int n, double kr, int order, ArrayKind array = ArrayKind::Rigid);

/// sum_nm d_n alpha_nm Y_nm(doa) for every frame and bin, [frame][bin].
std::vector<cplx> beamform_modal(const ModalFrames& frames, const Direction& doa, BeamformerKind kind,
                                 const ArrayGeometry& geometry, const FrequencyGrid& grid);

/// Phi_l / (sum Phi + Phi_r + Phi_z); 0 on a zero denominator; never below `floor`.
double wiener_gain(const PsdVector& theta, int source, double floor = 0.0);

struct SeparationOptions {
  BeamformerKind beamformer = BeamformerKind::MaxDirectivity;
  bool bypass_wiener = false;
  double gain_floor = 0.0;
  int threads = 1;
};

struct SeparationOutput {
  int frames = 0;
  int bins = 0;
  std::vector<std::vector<cplx>> spectra;  // per source, [frame][bin]
  std::vector<std::vector<double>> gains;  // per source, [frame][bin]
  std::vector<std::vector<double>> signals;
};

SeparationOutput separate_sources(const ModalFrames& frames, const SourceSet& sources, const PsdEstimates& psd,
                                  const ArrayGeometry& geometry, const FrequencyGrid& grid, const StftConfig& stft,
                                  std::size_t signal_length, const SeparationOptions& options = {});

}  // namespace sphpsd
