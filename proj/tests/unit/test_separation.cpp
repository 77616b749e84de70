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


#include <cmath>

#include <catch_amalgamated.hpp>

#include "sphpsd/scene.hpp"
#include "sphpsd/separation.hpp"

using namespace sphpsd;
using Catch::Approx;

namespace {

// One frame of modal coefficients for a unit plane wave from `doa`.
ModalFrames plane_wave_frames(const Direction& doa, const ArrayGeometry& geo, const FrequencyGrid& grid) {
  const BesselFloorPolicy pol;
  ModalEncoder enc(geo, grid, pol, 4);
  ModalFrames f;
  f.frames = 1;
  f.bins = grid.num_bins();
  f.max_order = 4;
  for (int b = 0; b < f.bins; ++b) f.order.push_back(enc.order(b));
  f.data.assign(static_cast<std::size_t>(f.bins) * f.modes(), cplx{});
  for (int b = 0; b < f.bins; ++b) {
    const auto p = plane_wave_pressure(doa, grid.wavenumber(b), geo);
    enc.encode(b, p.data(), &f.at(0, b, 0));
  }
  return f;
}

// Bins where every active mode keeps its unfloored strength.
std::vector<int> unfloored_bins(const ArrayGeometry& geo, const FrequencyGrid& grid, int last) {
  const BesselFloorPolicy pol;
  std::vector<int> out;
  for (int b = 1; b <= last; ++b) {
    const double k = grid.wavenumber(b);
    const int order = active_order(k, geo.radius, pol, 4);
    bool ok = true;
    for (int n = 0; n <= order; ++n) {
      ok = ok && std::abs(floored_bn(n, k, geo, pol)) == std::abs(bn_value(n, k * geo.radius, geo.kind));
    }
    if (ok) out.push_back(b);
  }
  return out;
}

}  // namespace

TEST_CASE("beam weights") {
  CHECK(std::abs(beam_weight(BeamformerKind::MaxDirectivity, 0, 1.0, 4) - 1.0 / 25.0) < 1e-15);
  CHECK(std::abs(beam_weight(BeamformerKind::MaxDirectivity, 2, 1.0, 4) + 1.0 / 25.0) < 1e-15);
  CHECK(std::abs(beam_weight(BeamformerKind::MaxDirectivity, 1, 1.0, 4) - cplx(0.0, -1.0 / 25.0)) < 1e-15);
  CHECK(std::abs(beam_weight(BeamformerKind::DelaySum, 0, 1e-9, 4, ArrayKind::Open) - kFourPi) < 1e-9);
  CHECK(std::abs(beam_weight(BeamformerKind::DelaySum, 0, 0.0, 4, ArrayKind::Rigid) - kFourPi) < 1e-12);
  CHECK_THROWS_AS(beam_weight(BeamformerKind::MaxDirectivity, 5, 1.0, 4), ArgumentError);
}

TEST_CASE("max-directivity beam is distortionless and rejects the back") {
  const FrequencyGrid grid;
  const Direction doa{1.0, 2.0};
  for (auto kind : {ArrayKind::Rigid, ArrayKind::Open}) {
    const auto geo = ArrayGeometry::icosahedral32(0.042, kind);
    // Exact modal coefficients, no array.
    ModalFrames exact;
    exact.frames = 1;
    exact.bins = grid.num_bins();
    exact.max_order = 4;
    exact.order.assign(exact.bins, 4);
    exact.data.assign(static_cast<std::size_t>(exact.bins) * exact.modes(), cplx{});
    const auto y = sph_harmonics_all(4, doa.theta, doa.phi);
    for (int b = 0; b < exact.bins; ++b) {
      for (int a = 0; a < exact.modes(); ++a) exact.at(0, b, a) = kFourPi * ipow(mode_from_acn(a).n) * std::conj(y[a]);
    }
    const auto out = beamform_modal(exact, doa, BeamformerKind::MaxDirectivity, geo, grid);
    for (const auto& v : out) CHECK(std::abs(v - 1.0) < 1e-12);

    const Direction back{kPi - doa.theta, doa.phi + kPi};
    const auto rej = beamform_modal(exact, back, BeamformerKind::MaxDirectivity, geo, grid);
    for (const auto& v : rej) CHECK(std::abs(v) < 0.3);
  }
  // Through the rigid array, below 5 kHz and away from floored bins.
  const auto geo = ArrayGeometry::icosahedral32();
  const auto f = plane_wave_frames(doa, geo, grid);
  const auto out = beamform_modal(f, doa, BeamformerKind::MaxDirectivity, geo, grid);
  const auto bins = unfloored_bins(geo, grid, 40);
  REQUIRE(bins.size() > 10);
  for (int b : bins) CHECK(std::abs(out[b] - 1.0) < 0.05);

  ModalFrames zero = f;
  std::fill(zero.data.begin(), zero.data.end(), cplx{});
  for (const auto& v : beamform_modal(zero, doa, BeamformerKind::DelaySum, geo, grid)) CHECK(v == cplx{});
  CHECK_THROWS_AS(beamform_modal(f, {4.0, 0.0}, BeamformerKind::MaxDirectivity, geo, grid), ArgumentError);
  CHECK_THROWS_AS(beamform_modal(f, {1.0, 7.0}, BeamformerKind::MaxDirectivity, geo, grid), ArgumentError);
}

TEST_CASE("wiener gains") {
  PsdVector one{{2.0}, {cplx(0.0)}, 0.0};
  CHECK(wiener_gain(one, 0) == 1.0);
  PsdVector two{{1.0, 1.0}, {cplx(0.0)}, 0.0};
  CHECK(wiener_gain(two, 0) == 0.5);
  PsdVector full{{1.0, 1.0}, {cplx(1.0 / std::sqrt(kFourPi))}, 1.0};
  CHECK(wiener_gain(full, 1) == Approx(0.25));
  PsdVector silent{{0.0, 0.0}, {cplx(0.0)}, 0.0};
  CHECK(wiener_gain(silent, 0) == 0.0);
  CHECK(wiener_gain(silent, 0, 0.1) == 0.1);
  CHECK_THROWS_AS(wiener_gain(two, 2), ArgumentError);
  double sum = 0.0;
  PsdVector mix{{0.3, 2.0, 0.7}, {cplx(0.2)}, 0.5};
  for (int l = 0; l < 3; ++l) {
    const double g = wiener_gain(mix, l);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
    sum += g;
  }
  CHECK(sum <= 1.0);
}

TEST_CASE("separate_sources: single source passes through") {
  const auto geo = ArrayGeometry::icosahedral32();
  SceneConfig sc;
  sc.duration_s = 0.5;
  sc.sources = {{{1.2, 0.8}, {}, 1.0, ""}};
  const auto r = render_scene(sc, geo);
  const auto grid = sc.grid();
  EstimatorConfig ec;
  const auto mf = modal_coefficients(r.mixture, geo, grid, ec.floor, ec.max_order);
  const auto psd = PsdEstimator(ec, sc.source_set(), geo, grid).run(mf);
  const auto out = separate_sources(mf, sc.source_set(), psd, geo, grid, sc.stft, r.mixture.signal_length);
  REQUIRE(out.signals.size() == 1);
  CHECK(out.signals[0].size() == r.stems[0].size());
  for (double g : out.gains[0]) {
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
  double peak = 0.0;
  for (const auto& s : r.stem_spectra[0]) peak = std::max(peak, std::norm(s));
  int checked = 0, good = 0;
  const auto bins = unfloored_bins(geo, grid, 40);
  for (int t = 0; t < out.frames; ++t) {
    for (int b : bins) {
      const std::size_t i = static_cast<std::size_t>(t) * out.bins + b;
      const cplx ref = r.stem_spectra[0][i];
      if (std::norm(ref) < 1e-4 * peak) continue;
      ++checked;
      if (std::abs(out.spectra[0][i] - ref) < 0.05 * std::abs(ref)) ++good;
    }
  }
  REQUIRE(checked > 0);
  CHECK(good == checked);

  // Linear in the field for fixed gains.
  SeparationOptions bypass;
  bypass.bypass_wiener = true;
  auto doubled = mf;
  for (auto& v : doubled.data) v *= 2.0;
  const auto a = separate_sources(mf, sc.source_set(), psd, geo, grid, sc.stft, r.mixture.signal_length, bypass);
  const auto b = separate_sources(doubled, sc.source_set(), psd, geo, grid, sc.stft, r.mixture.signal_length, bypass);
  for (std::size_t i = 0; i < a.spectra[0].size(); ++i) CHECK(std::abs(b.spectra[0][i] - 2.0 * a.spectra[0][i]) < 1e-12);

  auto zero = mf;
  std::fill(zero.data.begin(), zero.data.end(), cplx{});
  const auto z = separate_sources(zero, sc.source_set(), psd, geo, grid, sc.stft, r.mixture.signal_length);
  for (double v : z.signals[0]) CHECK(v == 0.0);
}
