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

#include "sphpsd/separation.hpp"

#include <algorithm>
#include <cmath>

namespace sphpsd {

cplx beam_weight(BeamformerKind kind, int n, double kr, int order, ArrayKind array) {
  if (n < 0 || n > order) throw ArgumentError("beam weight order outside [0, N]");
  if (kind == BeamformerKind::MaxDirectivity) return ipow(-n) / static_cast<double>(num_modes(order));
  return kFourPi * std::norm(bn_value(n, kr, array)) * ipow(-n);
}

std::vector<cplx> beamform_modal(const ModalFrames& frames, const Direction& doa, BeamformerKind kind,
                                 const ArrayGeometry& geometry, const FrequencyGrid& grid) {
  if (doa.theta < 0.0 || doa.theta > kPi || doa.phi < 0.0 || doa.phi >= 2.0 * kPi) {
    throw ArgumentError("steering direction outside [0, pi] x [0, 2 pi)");
  }
  if (frames.bins != grid.num_bins()) throw ArgumentError("modal frames do not match the frequency grid");
  const auto y = sph_harmonics_all(frames.max_order, doa.theta, doa.phi);
  std::vector<std::vector<cplx>> w(static_cast<std::size_t>(frames.bins));
  for (int b = 0; b < frames.bins; ++b) {
    const int order = frames.order[b];
    const double kr = grid.wavenumber(b) * geometry.radius;
    for (int a = 0; a < num_modes(order); ++a) {
      w[b].push_back(beam_weight(kind, mode_from_acn(a).n, kr, order, geometry.kind) * y[a]);
    }
  }
  std::vector<cplx> out(static_cast<std::size_t>(frames.frames) * frames.bins);
  for (int t = 0; t < frames.frames; ++t) {
    for (int b = 0; b < frames.bins; ++b) {
      cplx acc = 0.0;
      const cplx* alpha = &frames.at(t, b, 0);
      for (std::size_t a = 0; a < w[b].size(); ++a) acc += w[b][a] * alpha[a];
      out[static_cast<std::size_t>(t) * frames.bins + b] = acc;
    }
  }
  return out;
}

double wiener_gain(const PsdVector& theta, int source, double floor) {
  if (source < 0 || source >= static_cast<int>(theta.sources.size())) throw ArgumentError("source index out of range");
  double den = theta.reverb_total() + theta.noise;
  for (double p : theta.sources) den += p;
  const double h = den > 0.0 ? theta.sources[source] / den : 0.0;
  return std::clamp(std::max(h, floor), 0.0, 1.0);
}

SeparationOutput separate_sources(const ModalFrames& frames, const SourceSet& sources, const PsdEstimates& psd,
                                  const ArrayGeometry& geometry, const FrequencyGrid& grid, const StftConfig& stft,
                                  std::size_t signal_length, const SeparationOptions& options) {
  if (psd.frames != frames.frames || psd.bins != frames.bins || psd.num_sources != static_cast<int>(sources.size())) {
    throw ArgumentError("PSD estimates do not cover every frame, bin and source");
  }
  SeparationOutput out;
  out.frames = frames.frames;
  out.bins = frames.bins;
  const int n_src = static_cast<int>(sources.size());
  out.spectra.resize(static_cast<std::size_t>(n_src));
  out.gains.resize(static_cast<std::size_t>(n_src));
  out.signals.resize(static_cast<std::size_t>(n_src));
  parallel_for(n_src, options.threads, [&](int l) {
    auto s = beamform_modal(frames, sources[l].doa, options.beamformer, geometry, grid);
    std::vector<double> g(s.size(), 1.0);
    if (!options.bypass_wiener) {
      for (int t = 0; t < frames.frames; ++t) {
        for (int b = 0; b < frames.bins; ++b) {
          const std::size_t i = static_cast<std::size_t>(t) * frames.bins + b;
          g[i] = wiener_gain(psd.at(t, b), l, options.gain_floor);
          s[i] *= g[i];
        }
      }
    }
    out.signals[l] = istft_channel(s, frames.frames, stft, signal_length);
    out.spectra[l] = std::move(s);
    out.gains[l] = std::move(g);
  });
  return out;
}

}  // namespace sphpsd
