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

#include "sphpsd/stft.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

namespace sphpsd {

std::vector<double> hann_periodic(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / length);
  return w;
}

double StftConfig::cola_gain() const {
  const auto w = hann_periodic(window_length);
  double s = 0.0;
  for (int i = 0; i < window_length; i += hop) s += w[i];
  return s;
}

void StftConfig::validate() const {
  if (window_length <= 0 || hop <= 0 || fft_size <= 0) throw ConfigError("STFT sizes must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  if (window_length > fft_size) throw ConfigError("window longer than FFT size");
  if (fft_size % 2 != 0) throw ConfigError("FFT size must be even");
  if (window_length % hop != 0) throw ConfigError("hop must divide the window length");
  const auto w = hann_periodic(window_length);
  const double ref = cola_gain();
  for (int p = 0; p < hop; ++p) {
    double s = 0.0;
    for (int i = p; i < window_length; i += hop) s += w[i];
    if (!(ref > 0.0) || std::abs(s - ref) > 1e-9 * ref) {
      throw ConfigError("window/hop pair does not satisfy constant overlap-add");
    }
  }
}

StftSpectra::StftSpectra(const StftConfig& cfg, int n_frames, int n_channels, std::size_t length)
    : config(cfg), frames(n_frames), bins(cfg.num_bins()), channels(n_channels), signal_length(length) {
  data.assign(static_cast<std::size_t>(frames) * bins * channels, cplx{});
}

int num_frames(std::size_t signal_length, const StftConfig& config) {
  const std::size_t pad = static_cast<std::size_t>(config.window_length - config.hop);
  return static_cast<int>((signal_length + pad + config.hop - 1) / config.hop);
}

StftSpectra stft_analyze(const std::vector<std::vector<double>>& signals, const StftConfig& config) {
  config.validate();
  if (signals.empty()) throw ArgumentError("no channels to analyze");
  const std::size_t length = signals.front().size();
  for (const auto& ch : signals) {
    if (ch.size() != length) throw ArgumentError("channels differ in length");
  }
  const int channels = static_cast<int>(signals.size());
  const int frames = num_frames(length, config);
  StftSpectra out(config, frames, channels, length);
  const auto window = hann_periodic(config.window_length);
  const long pad = config.window_length - config.hop;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<std::size_t>(config.fft_size));
  std::vector<cplx> spec;
  for (int q = 0; q < channels; ++q) {
    const auto& x = signals[q];
    for (int t = 0; t < frames; ++t) {
      std::fill(buf.begin(), buf.end(), 0.0);
      const long start = static_cast<long>(t) * config.hop - pad;
      for (int i = 0; i < config.window_length; ++i) {
        const long n = start + i;
        if (n >= 0 && n < static_cast<long>(length)) buf[i] = window[i] * x[n];
      }
      fft.fwd(spec, buf);
      for (int b = 0; b < out.bins; ++b) out.at(t, b, q) = spec[b];
    }
  }
  return out;
}

std::vector<double> istft_channel(const std::vector<cplx>& frames, int n_frames, const StftConfig& config,
                                  std::size_t signal_length) {
  config.validate();
  const int bins = config.num_bins();
  if (frames.size() != static_cast<std::size_t>(n_frames) * bins) throw ArgumentError("frame buffer size mismatch");
  const long pad = config.window_length - config.hop;
  const double gain = config.cola_gain();
  std::vector<double> out(signal_length, 0.0);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cplx> spec(static_cast<std::size_t>(bins));
  std::vector<double> grain;
  for (int t = 0; t < n_frames; ++t) {
    std::copy_n(frames.begin() + static_cast<long>(t) * bins, bins, spec.begin());
    spec.front().imag(0.0);
    spec.back().imag(0.0);
    fft.inv(grain, spec, config.fft_size);
    const long start = static_cast<long>(t) * config.hop - pad;
    for (int i = 0; i < config.window_length; ++i) {
      const long n = start + i;
      if (n >= 0 && n < static_cast<long>(signal_length)) out[n] += grain[i] / gain;
    }
  }
  return out;
}

std::vector<std::vector<double>> stft_synthesize(const StftSpectra& spectra) {
  std::vector<std::vector<double>> out;
  std::vector<cplx> buf(static_cast<std::size_t>(spectra.frames) * spectra.bins);
  for (int q = 0; q < spectra.channels; ++q) {
    for (int t = 0; t < spectra.frames; ++t) {
      for (int b = 0; b < spectra.bins; ++b) buf[static_cast<std::size_t>(t) * spectra.bins + b] = spectra.at(t, b, q);
    }
    out.push_back(istft_channel(buf, spectra.frames, spectra.config, spectra.signal_length));
  }
  return out;
}

}  // namespace sphpsd
