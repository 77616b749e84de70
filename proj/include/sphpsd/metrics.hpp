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

struct PsdErrorReport {
  double db = 0.0;
  std::vector<double> per_bin;  // E|Phi - Phi_hat| / E|Phi|; NaN where every frame is silent
  int bins_used = 0;
};

/// Full-band normalized PSD error over [frame][bin] arrays. Frames more than
/// `silence_db` below the peak of `truth` are left out of the expectations.
/// The result is floored at -100 dB.
PsdErrorReport psd_error_report(const std::vector<double>& truth, const std::vector<double>& estimate, int frames,
                                int bins, double silence_db = -60.0);
double psd_error(const std::vector<double>& truth, const std::vector<double>& estimate, int frames, int bins,
                 double silence_db = -60.0);

/// Recursive average beta * y(t-1) + (1 - beta) * x(t) per bin, from zero.
std::vector<double> ewma_frames(const std::vector<double>& values, int frames, int bins, double beta);

/// Slices component `index` out of a [frame][bin][count] array.
std::vector<double> component(const std::vector<double>& values, int frames, int bins, int count, int index);

struct SeparationScore {
  double sir_db = 0.0;
  double snr_db = 0.0;
};

/// SIR: energy of the projection onto stem `target` over the energy of the
/// projection onto the other stems. SNR: ||s||^2 / ||s_hat - s||^2. Both
/// capped at 100 dB.
SeparationScore separation_score(const std::vector<double>& estimate, const std::vector<std::vector<double>>& stems,
                                 int target);

struct SeparationImprovement {
  SeparationScore output;
  SeparationScore mixture;
  double sir_gain_db = 0.0;
  double snr_gain_db = 0.0;
};

SeparationImprovement sir_snr_improvement(const std::vector<double>& estimate,
                                          const std::vector<std::vector<double>>& stems, int target,
                                          const std::vector<double>& mixture);

}  // namespace sphpsd
