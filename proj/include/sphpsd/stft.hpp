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

#include <cstddef>
#include <vector>

#include "sphpsd/common.hpp"

namespace sphpsd {

struct StftConfig {
  int window_length = 128;
  int hop = 64;
  int fft_size = 128;
  double sample_rate = 16000.0;

  int num_bins() const { return fft_size / 2 + 1; }
  /// Throws ConfigError unless the hop divides the window, the window fits
  /// the FFT, and the shifted windows sum to a constant.
  void validate() const;
  double cola_gain() const;
};

std::vector<double> hann_periodic(int length);

/// Multichannel STFT, stored frame-major, then bin, then channel.
struct StftSpectra {
  StftConfig config;
  int frames = 0;
  int bins = 0;
  int channels = 0;
  std::size_t signal_length = 0;
  std::vector<cplx> data;

  StftSpectra() = default;
  StftSpectra(const StftConfig& cfg, int n_frames, int n_channels, std::size_t length);

  std::size_t offset(int frame, int bin) const {
    return (static_cast<std::size_t>(frame) * bins + bin) * channels;
  }
  cplx& at(int frame, int bin, int channel) { return data[offset(frame, bin) + channel]; }
  const cplx& at(int frame, int bin, int channel) const { return data[offset(frame, bin) + channel]; }
};

int num_frames(std::size_t signal_length, const StftConfig& config);

/// `signals[q]` is channel q; all channels must share one length.
StftSpectra stft_analyze(const std::vector<std::vector<double>>& signals, const StftConfig& config);
std::vector<std::vector<double>> stft_synthesize(const StftSpectra& spectra);

/// Single-channel inverse. `frames` holds frames x bins values.
std::vector<double> istft_channel(const std::vector<cplx>& frames, int n_frames, const StftConfig& config,
                                  std::size_t signal_length);

}  // namespace sphpsd
