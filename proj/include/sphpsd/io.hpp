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

#include <string>
#include <vector>

#include <json.hpp>

#include "sphpsd/estimator.hpp"
#include "sphpsd/geometry.hpp"
#include "sphpsd/scene.hpp"

namespace sphpsd {

enum class SampleFormat { Pcm16, Pcm24, Float32 };

struct WavData {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;

  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// Reads 16/24/32-bit PCM and 32-bit float WAV files. Throws ConfigError.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const WavData& wav, SampleFormat format = SampleFormat::Float32);

/// Raw STFT spectra: magic "SPHSPEC1", int32 window, hop, fft, frames,
/// channels, uint64 signal length, float64 sample rate, then complex128 data
/// in StftSpectra order, all little-endian.
void write_spectra(const std::string& path, const StftSpectra& spectra);
StftSpectra read_spectra(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& value);

/// Rows are frames, columns bins.
void write_matrix_csv(const std::string& path, const std::vector<double>& values, int rows, int cols,
                      const std::string& header = {});
std::vector<double> read_matrix_csv(const std::string& path, int& rows, int& cols);

ArrayGeometry geometry_from_json(const nlohmann::json& j);
nlohmann::json geometry_to_json(const ArrayGeometry& geometry);
ArrayGeometry load_geometry(const std::string& path);

Direction direction_from_json(const nlohmann::json& j);
nlohmann::json direction_to_json(const Direction& d);

SourceSet sources_from_json(const nlohmann::json& j);
nlohmann::json sources_to_json(const SourceSet& s);

StftConfig stft_from_json(const nlohmann::json& j, StftConfig base = {});
nlohmann::json stft_to_json(const StftConfig& c);

EstimatorConfig estimator_from_json(const nlohmann::json& j, EstimatorConfig base = {});
nlohmann::json estimator_to_json(const EstimatorConfig& c);

/// Paths inside the scene config resolve relative to `base_dir`.
SceneConfig scene_from_json(const nlohmann::json& j, const std::string& base_dir = {});
nlohmann::json scene_to_json(const SceneConfig& c);

}  // namespace sphpsd
