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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sphpsd/estimator.hpp"
#include "sphpsd/geometry.hpp"
#include "sphpsd/stft.hpp"

namespace sphpsd {

/// Counter-based seeding: a generator for stream/frame/bin never depends on
/// how many numbers other cells consumed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0);

struct SourceSpec {
  Direction doa;
  std::optional<double> range_m;
  double power = 1.0;    // variance of the white Gaussian excitation
  std::string wav_path;  // when set, the excitation is read from this mono file
};

struct ReverbSpec {
  bool enabled = false;
  double psd = 0.0;                 // total reverberant PSD at the centre
  std::optional<double> drr_db;     // overrides psd relative to the mean direct PSD
  int grid_order = 12;              // Gauss rule with grid_order x 2 grid_order directions
  /// Relative angular profile: coefficient c_vu for u >= 0 (c_00 = 1 implied);
  /// Gamma_vu = Gamma_00 c_vu and Gamma_v,-u = (-1)^u conj(Gamma_vu).
  std::vector<std::pair<ModeIndex, cplx>> profile;
  int profile_order() const;
};

struct NoiseSpec {
  bool enabled = false;
  double psd = 0.0;
  std::optional<double> snr_db;  // overrides psd relative to the mean in-band direct PSD
  double band_hz = 1000.0;
  int grid_order = 12;
};

struct SceneConfig {
  std::vector<SourceSpec> sources;
  ReverbSpec reverb;
  NoiseSpec noise;
  double sensor_noise_psd = 0.0;
  double duration_s = 2.0;
  std::uint64_t seed = 1;
  StftConfig stft;
  double speed_of_sound = 343.0;

  FrequencyGrid grid() const { return {stft.sample_rate, stft.fft_size, speed_of_sound}; }
  SourceSet source_set() const;
  void validate() const;
};

struct GroundTruth {
  int frames = 0;
  int bins = 0;
  int num_sources = 0;
  std::vector<double> source_psd;  // [frame][bin][source], PSD at the centre
  std::vector<double> reverb_psd;  // [bin]
  std::vector<double> noise_psd;   // [bin]
  int reverb_order = 0;
  std::vector<cplx> gamma;  // [bin][(V+1)^2], realized by the frozen directions

  double source_at(int frame, int bin, int l) const {
    return source_psd[(static_cast<std::size_t>(frame) * bins + bin) * num_sources + l];
  }
};

struct SceneRender {
  StftSpectra mixture;
  GroundTruth truth;
  std::vector<std::vector<cplx>> stem_spectra;  // per source, [frame][bin], at the centre
  std::vector<std::vector<double>> stems;       // per source, time domain at the centre
  std::vector<cplx> origin_spectra;             // full mixture at the centre, [frame][bin]
  std::vector<double> origin_mixture;
};

// Steering vectors, one value per microphone.
std::vector<cplx> plane_wave_pressure(const Direction& doa, double k, const ArrayGeometry& geometry);
std::vector<cplx> point_source_pressure(const Direction& doa, double range, double k, const ArrayGeometry& geometry);
/// Modal-sum versions; `terms` < 0 selects ceil(e k r) + 4.
std::vector<cplx> plane_wave_modal(const Direction& doa, double k, const ArrayGeometry& geometry, int terms = -1);
std::vector<cplx> point_source_modal(const Direction& doa, double range, double k, const ArrayGeometry& geometry,
                                     int terms = -1);
/// Free-field plane wave regardless of the array kind.
std::vector<cplx> free_plane_wave(const Direction& doa, double k, const ArrayGeometry& geometry);

/// Per-bin microphone pressures [bin][mic] of a source with the given spectrum.
std::vector<std::vector<cplx>> synth_plane_wave(const Direction& doa, const std::vector<cplx>& spectrum,
                                                const ArrayGeometry& geometry, const FrequencyGrid& grid);
std::vector<std::vector<cplx>> synth_point_source(const Direction& doa, double range,
                                                  const std::vector<cplx>& spectrum, const ArrayGeometry& geometry,
                                                  const FrequencyGrid& grid);

struct FieldRender {
  StftSpectra pressures;
  std::vector<cplx> gamma;  // [bin][(V+1)^2]
};

/// Reverberant field: frozen random plane-wave directions with per-frame
/// circular Gaussian gains whose expected power follows the profile.
/// `psd[bin]` is the total power at the centre.
FieldRender synth_reverb_field(const std::vector<double>& psd, const ReverbSpec& spec, int frames,
                               std::uint64_t seed, const ArrayGeometry& geometry, const StftConfig& stft,
                               double speed_of_sound = 343.0);

/// Diffuse noise: equal-power free-field plane waves from an exact spherical rule.
StftSpectra synth_diffuse_noise(const std::vector<double>& psd, int grid_order, int frames, std::uint64_t seed,
                                const ArrayGeometry& geometry, const StftConfig& stft, double speed_of_sound = 343.0);

SceneRender render_scene(const SceneConfig& config, const ArrayGeometry& geometry, int threads = 1);

}  // namespace sphpsd
