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

#include "sphpsd/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sphpsd/io.hpp"
#include "sphpsd/parallel.hpp"

namespace sphpsd {

namespace {

enum Stream : std::uint64_t {
  kReverbDirections = 1,
  kReverbGains = 2,
  kNoiseDirections = 3,
  kNoiseGains = 4,
  kSensor = 5,
  kSourceBase = 100,
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double cos_angle(const std::array<double, 3>& u, const std::array<double, 3>& v) {
  return std::clamp(u[0] * v[0] + u[1] * v[1] + u[2] * v[2], -1.0, 1.0);
}

// sum_n c_n (2n+1)/(4 pi) P_n(x), the addition-theorem form of sum_nm c_n Y*_nm(y) Y_nm(x).
cplx legendre_series(const std::vector<cplx>& c, double x) {
  double p0 = 1.0, p1 = x;
  cplx acc = c[0] * p0;
  if (c.size() > 1) acc += 3.0 * c[1] * p1;
  for (std::size_t n = 2; n < c.size(); ++n) {
    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
    p0 = p1;
    p1 = p2;
    acc += (2.0 * n + 1.0) * c[n] * p1;
  }
  return acc / kFourPi;
}

int default_terms(double k, double r) { return static_cast<int>(std::ceil(std::numbers::e * k * r)) + 4; }

cplx cgauss(std::mt19937_64& rng, double variance) {
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  const double re = g(rng);
  return {re, g(rng)};
}

std::vector<double> white_noise(std::size_t n, double power, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(power));
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ stream);
  h = splitmix(h ^ a);
  return splitmix(h ^ b);
}

int ReverbSpec::profile_order() const {
  int v = 0;
  for (const auto& [idx, c] : profile) v = std::max(v, idx.n);
  return v;
}

SourceSet SceneConfig::source_set() const {
  SourceSet s;
  for (const auto& src : sources) s.push_back({src.doa, src.range_m});
  return s;
}

void SceneConfig::validate() const {
  stft.validate();
  if (!(duration_s > 0.0)) throw ConfigError("scene duration must be positive");
  if (!(speed_of_sound > 0.0)) throw ConfigError("speed of sound must be positive");
  if (sources.empty()) throw ConfigError("scene has no sources");
  validate_sources(source_set());
  for (const auto& s : sources) {
    if (!(s.power >= 0.0)) throw ConfigError("source power must be non-negative");
  }
  if (reverb.enabled) {
    if (reverb.grid_order < 1) throw ConfigError("reverb grid_order must be positive");
    if (!(reverb.psd >= 0.0)) throw ConfigError("reverb psd must be non-negative");
    const int v = reverb.profile_order();
    if (2 * reverb.grid_order - 1 < v + 2 * 4) {
      throw ConfigError("reverb grid_order too small for a profile of order " + std::to_string(v));
    }
    for (const auto& [idx, c] : reverb.profile) {
      sphpsd::validate(idx);
      if (idx.m < 0) throw ConfigError("reverb profile lists u >= 0 only");
      if (idx.m == 0 && std::abs(c.imag()) > 0.0) throw ConfigError("reverb profile c_v0 must be real");
      if (idx.n == 0) throw ConfigError("reverb profile c_00 is fixed to 1");
    }
  }
  if (noise.enabled) {
    if (noise.grid_order < 8) throw ConfigError("noise grid_order must be at least 8 (>= 128 plane waves)");
    if (!(noise.psd >= 0.0)) throw ConfigError("noise psd must be non-negative");
  }
  if (!(sensor_noise_psd >= 0.0)) throw ConfigError("sensor noise psd must be non-negative");
}

std::vector<cplx> free_plane_wave(const Direction& doa, double k, const ArrayGeometry& geometry) {
  const auto y = doa.unit_vector();
  std::vector<cplx> p(geometry.size());
  for (std::size_t q = 0; q < geometry.size(); ++q) {
    const auto x = geometry.position(q);
    p[q] = std::exp(cplx(0.0, k * (y[0] * x[0] + y[1] * x[1] + y[2] * x[2])));
  }
  return p;
}

std::vector<cplx> plane_wave_modal(const Direction& doa, double k, const ArrayGeometry& geometry, int terms) {
  const double kr = k * geometry.radius;
  if (terms < 0) terms = default_terms(k, geometry.radius);
  std::vector<cplx> c(static_cast<std::size_t>(terms + 1));
  for (int n = 0; n <= terms; ++n) c[n] = kFourPi * ipow(n) * bn_value(n, kr, geometry.kind);
  const auto y = doa.unit_vector();
  std::vector<cplx> p(geometry.size());
  for (std::size_t q = 0; q < geometry.size(); ++q) p[q] = legendre_series(c, cos_angle(y, geometry.mics[q].dir.unit_vector()));
  return p;
}

std::vector<cplx> plane_wave_pressure(const Direction& doa, double k, const ArrayGeometry& geometry) {
  if (geometry.kind == ArrayKind::Open) return free_plane_wave(doa, k, geometry);
  return plane_wave_modal(doa, k, geometry);
}

std::vector<cplx> point_source_modal(const Direction& doa, double range, double k, const ArrayGeometry& geometry,
                                     int terms) {
  if (!(range > geometry.radius)) throw DomainError("point source must lie outside the array");
  if (!(k > 0.0)) throw DomainError("modal point-source sum needs k > 0");
  const double kr = k * geometry.radius;
  if (terms < 0) {
    const int geometric = static_cast<int>(std::ceil(std::log(1e-12) / std::log(geometry.radius / range)));
    terms = std::min(80, std::max(default_terms(k, geometry.radius), geometric));
  }
  std::vector<cplx> c(static_cast<std::size_t>(terms + 1));
  for (int n = 0; n <= terms; ++n) {
    c[n] = cplx(0.0, -k) * std::conj(sph_hankel1(n, k * range)) * bn_value(n, kr, geometry.kind);
  }
  const auto y = doa.unit_vector();
  std::vector<cplx> p(geometry.size());
  for (std::size_t q = 0; q < geometry.size(); ++q) p[q] = legendre_series(c, cos_angle(y, geometry.mics[q].dir.unit_vector()));
  return p;
}

std::vector<cplx> point_source_pressure(const Direction& doa, double range, double k, const ArrayGeometry& geometry) {
  if (!(range > geometry.radius)) throw DomainError("point source must lie outside the array");
  if (geometry.kind == ArrayKind::Rigid && k > 0.0) return point_source_modal(doa, range, k, geometry);
  auto src = doa.unit_vector();
  for (auto& v : src) v *= range;
  std::vector<cplx> p(geometry.size());
  for (std::size_t q = 0; q < geometry.size(); ++q) {
    const auto x = geometry.position(q);
    const double d = std::sqrt((x[0] - src[0]) * (x[0] - src[0]) + (x[1] - src[1]) * (x[1] - src[1]) +
                               (x[2] - src[2]) * (x[2] - src[2]));
    p[q] = std::exp(cplx(0.0, -k * d)) / (kFourPi * d);
  }
  return p;
}

std::vector<std::vector<cplx>> synth_plane_wave(const Direction& doa, const std::vector<cplx>& spectrum,
                                                const ArrayGeometry& geometry, const FrequencyGrid& grid) {
  if (static_cast<int>(spectrum.size()) != grid.num_bins()) throw ArgumentError("spectrum length != bin count");
  std::vector<std::vector<cplx>> out;
  for (int b = 0; b < grid.num_bins(); ++b) {
    auto p = plane_wave_pressure(doa, grid.wavenumber(b), geometry);
    for (auto& v : p) v *= spectrum[b];
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<cplx>> synth_point_source(const Direction& doa, double range,
                                                  const std::vector<cplx>& spectrum, const ArrayGeometry& geometry,
                                                  const FrequencyGrid& grid) {
  if (static_cast<int>(spectrum.size()) != grid.num_bins()) throw ArgumentError("spectrum length != bin count");
  std::vector<std::vector<cplx>> out;
  for (int b = 0; b < grid.num_bins(); ++b) {
    auto p = point_source_pressure(doa, range, grid.wavenumber(b), geometry);
    for (auto& v : p) v *= spectrum[b];
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

struct DirectionalPowers {
  std::vector<Direction> dirs;
  std::vector<double> power;  // per unit Gamma_00
  std::vector<cplx> gamma;    // realized coefficients per unit Gamma_00
  int order = 0;
};

DirectionalPowers reverb_directions(const ReverbSpec& spec, std::uint64_t seed) {
  DirectionalPowers d;
  d.order = spec.profile_order();
  std::vector<cplx> target(static_cast<std::size_t>(num_modes(d.order)), cplx{});
  target[0] = 1.0;
  for (const auto& [idx, c] : spec.profile) {
    target[acn_index(idx)] = c;
    target[acn_index({idx.n, -idx.m})] = minus_one_pow(idx.m) * std::conj(c);
  }
  const auto grid = rotated_gauss_grid(spec.grid_order, mix_seed(seed, kReverbDirections));
  double peak = 0.0;
  for (const auto& pt : grid) {
    const auto y = sph_harmonics_all(d.order, pt.dir.theta, pt.dir.phi);
    cplx density = 0.0;
    for (int a = 0; a < num_modes(d.order); ++a) density += target[a] * y[a];
    d.dirs.push_back(pt.dir);
    d.power.push_back(density.real() * pt.weight);
    peak = std::max(peak, std::abs(d.power.back()));
  }
  for (auto& p : d.power) {
    if (p < -1e-12 * peak) throw ConfigError("reverb directional profile is negative in some directions");
    p = std::max(p, 0.0);
  }
  d.gamma.assign(target.size(), cplx{});
  for (std::size_t j = 0; j < d.dirs.size(); ++j) {
    const auto y = sph_harmonics_all(d.order, d.dirs[j].theta, d.dirs[j].phi);
    for (std::size_t a = 0; a < target.size(); ++a) d.gamma[a] += d.power[j] * std::conj(y[a]);
  }
  return d;
}

// Adds sum_j steer(q, j) g_j to `out` for one frame and bin; returns sum_j g_j.
cplx add_random_field(const Eigen::MatrixXcd& steer, const std::vector<double>& power, std::mt19937_64& rng,
                      cplx* out) {
  Eigen::VectorXcd g(static_cast<Eigen::Index>(power.size()));
  for (std::size_t j = 0; j < power.size(); ++j) g(static_cast<Eigen::Index>(j)) = cgauss(rng, power[j]);
  Eigen::Map<Eigen::VectorXcd> o(out, steer.rows());
  o.noalias() += steer * g;
  return g.sum();
}

Eigen::MatrixXcd steering(const std::vector<Direction>& dirs, double k, const ArrayGeometry& geometry, bool free) {
  Eigen::MatrixXcd s(static_cast<Eigen::Index>(geometry.size()), static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const auto p = free ? free_plane_wave(dirs[j], k, geometry) : plane_wave_pressure(dirs[j], k, geometry);
    for (std::size_t q = 0; q < p.size(); ++q) s(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = p[q];
  }
  return s;
}

}  // namespace

FieldRender synth_reverb_field(const std::vector<double>& psd, const ReverbSpec& spec, int frames,
                               std::uint64_t seed, const ArrayGeometry& geometry, const StftConfig& stft,
                               double speed_of_sound) {
  const FrequencyGrid grid{stft.sample_rate, stft.fft_size, speed_of_sound};
  if (static_cast<int>(psd.size()) != grid.num_bins()) throw ArgumentError("reverb psd length != bin count");
  for (double p : psd) {
    if (!(p >= 0.0)) throw ConfigError("reverb psd must be non-negative");
  }
  const auto d = reverb_directions(spec, seed);
  FieldRender out{StftSpectra(stft, frames, static_cast<int>(geometry.size()), 0), {}};
  out.gamma.assign(static_cast<std::size_t>(grid.num_bins()) * d.gamma.size(), cplx{});
  for (int b = 0; b < grid.num_bins(); ++b) {
    const double g00 = psd[b] / std::sqrt(kFourPi);
    for (std::size_t a = 0; a < d.gamma.size(); ++a) out.gamma[b * d.gamma.size() + a] = g00 * d.gamma[a];
    if (psd[b] == 0.0) continue;
    std::vector<double> power(d.power);
    for (auto& p : power) p *= g00;
    const auto steer = steering(d.dirs, grid.wavenumber(b), geometry, false);
    for (int t = 0; t < frames; ++t) {
      std::mt19937_64 rng(mix_seed(seed, kReverbGains, t, b));
      add_random_field(steer, power, rng, &out.pressures.data[out.pressures.offset(t, b)]);
    }
  }
  return out;
}

StftSpectra synth_diffuse_noise(const std::vector<double>& psd, int grid_order, int frames, std::uint64_t seed,
                                const ArrayGeometry& geometry, const StftConfig& stft, double speed_of_sound) {
  const FrequencyGrid grid{stft.sample_rate, stft.fft_size, speed_of_sound};
  if (static_cast<int>(psd.size()) != grid.num_bins()) throw ArgumentError("noise psd length != bin count");
  const auto pts = rotated_gauss_grid(grid_order, mix_seed(seed, kNoiseDirections));
  std::vector<Direction> dirs;
  for (const auto& p : pts) dirs.push_back(p.dir);
  StftSpectra out(stft, frames, static_cast<int>(geometry.size()), 0);
  for (int b = 0; b < grid.num_bins(); ++b) {
    if (!(psd[b] >= 0.0)) throw ConfigError("noise psd must be non-negative");
    if (psd[b] == 0.0) continue;
    std::vector<double> power;
    for (const auto& p : pts) power.push_back(psd[b] * p.weight / kFourPi);
    const auto steer = steering(dirs, grid.wavenumber(b), geometry, true);
    for (int t = 0; t < frames; ++t) {
      std::mt19937_64 rng(mix_seed(seed, kNoiseGains, t, b));
      add_random_field(steer, power, rng, &out.data[out.offset(t, b)]);
    }
  }
  return out;
}

SceneRender render_scene(const SceneConfig& config, const ArrayGeometry& geometry, int threads) {
  config.validate();
  geometry.validate();
  for (const auto& s : config.sources) {
    if (s.range_m && *s.range_m <= geometry.radius) throw ConfigError("near-field source inside the array radius");
  }
  const StftConfig& stft = config.stft;
  const FrequencyGrid grid = config.grid();
  const auto samples = static_cast<std::size_t>(std::llround(config.duration_s * stft.sample_rate));
  const int bins = grid.num_bins();
  const int mics = static_cast<int>(geometry.size());
  const int n_src = static_cast<int>(config.sources.size());

  // Source excitations and their spectra at the centre.
  SceneRender out;
  std::vector<StftSpectra> src_spec;
  for (int l = 0; l < n_src; ++l) {
    const auto& s = config.sources[l];
    std::vector<double> x;
    if (!s.wav_path.empty()) {
      const auto wav = read_wav(s.wav_path);
      if (wav.channels.size() != 1) throw ConfigError("source WAV must be mono: " + s.wav_path);
      if (wav.sample_rate != stft.sample_rate) throw ConfigError("source WAV sample rate differs from the scene: " + s.wav_path);
      x = wav.channels.front();
      x.resize(samples, 0.0);
      for (auto& v : x) v *= std::sqrt(s.power);
    } else {
      x = white_noise(samples, s.power, mix_seed(config.seed, kSourceBase + l));
    }
    src_spec.push_back(stft_analyze({x}, stft));
  }
  const int frames = src_spec.front().frames;

  // Steering to the microphones and to the centre.
  std::vector<std::vector<std::vector<cplx>>> steer(static_cast<std::size_t>(bins));
  std::vector<std::vector<cplx>> centre(static_cast<std::size_t>(bins));
  parallel_for(bins, threads, [&](int b) {
    const double k = grid.wavenumber(b);
    for (const auto& s : config.sources) {
      if (s.range_m) {
        steer[b].push_back(point_source_pressure(s.doa, *s.range_m, k, geometry));
        centre[b].push_back(std::exp(cplx(0.0, -k * *s.range_m)) / (kFourPi * *s.range_m));
      } else {
        steer[b].push_back(plane_wave_pressure(s.doa, k, geometry));
        centre[b].push_back(1.0);
      }
    }
  });

  GroundTruth& truth = out.truth;
  truth.frames = frames;
  truth.bins = bins;
  truth.num_sources = n_src;
  truth.source_psd.assign(static_cast<std::size_t>(frames) * bins * n_src, 0.0);
  out.stem_spectra.assign(static_cast<std::size_t>(n_src), std::vector<cplx>(static_cast<std::size_t>(frames) * bins));
  out.origin_spectra.assign(static_cast<std::size_t>(frames) * bins, cplx{});
  out.mixture = StftSpectra(stft, frames, mics, samples);

  double direct_sum = 0.0, direct_band = 0.0;
  long band_cells = 0;
  for (int t = 0; t < frames; ++t) {
    for (int b = 0; b < bins; ++b) {
      double cell = 0.0;
      for (int l = 0; l < n_src; ++l) {
        const cplx s = src_spec[l].at(t, b, 0) * centre[b][l];
        out.stem_spectra[l][static_cast<std::size_t>(t) * bins + b] = s;
        truth.source_psd[(static_cast<std::size_t>(t) * bins + b) * n_src + l] = std::norm(s);
        cell += std::norm(s);
      }
      direct_sum += cell;
      if (grid.frequency(b) <= config.noise.band_hz) {
        direct_band += cell;
        ++band_cells;
      }
    }
  }
  const double mean_direct = direct_sum / (static_cast<double>(frames) * bins);
  const double mean_band = band_cells ? direct_band / band_cells : 0.0;

  truth.reverb_psd.assign(static_cast<std::size_t>(bins), 0.0);
  truth.noise_psd.assign(static_cast<std::size_t>(bins), 0.0);
  if (config.reverb.enabled) {
    const double level = config.reverb.drr_db ? mean_direct * std::pow(10.0, -*config.reverb.drr_db / 10.0)
                                              : config.reverb.psd;
    std::fill(truth.reverb_psd.begin(), truth.reverb_psd.end(), level);
  }
  if (config.noise.enabled) {
    const double level = config.noise.snr_db ? mean_band * std::pow(10.0, -*config.noise.snr_db / 10.0)
                                             : config.noise.psd;
    for (int b = 0; b < bins; ++b) {
      if (grid.frequency(b) <= config.noise.band_hz) truth.noise_psd[b] = level;
    }
  }

  // Reverberation and noise directions are frozen per scene.
  DirectionalPowers rev;
  if (config.reverb.enabled) rev = reverb_directions(config.reverb, config.seed);
  truth.reverb_order = rev.order;
  truth.gamma.assign(static_cast<std::size_t>(bins) * num_modes(rev.order), cplx{});
  std::vector<SpherePoint> noise_pts;
  std::vector<Direction> noise_dirs;
  if (config.noise.enabled) {
    noise_pts = rotated_gauss_grid(config.noise.grid_order, mix_seed(config.seed, kNoiseDirections));
    for (const auto& p : noise_pts) noise_dirs.push_back(p.dir);
  }

  parallel_for(bins, threads, [&](int b) {
    const double k = grid.wavenumber(b);
    Eigen::MatrixXcd rev_steer, noise_steer;
    std::vector<double> rev_power, noise_power;
    if (config.reverb.enabled && truth.reverb_psd[b] > 0.0) {
      const double g00 = truth.reverb_psd[b] / std::sqrt(kFourPi);
      for (double p : rev.power) rev_power.push_back(p * g00);
      for (std::size_t a = 0; a < rev.gamma.size(); ++a) truth.gamma[b * rev.gamma.size() + a] = g00 * rev.gamma[a];
      rev_steer = steering(rev.dirs, k, geometry, false);
    }
    if (config.noise.enabled && truth.noise_psd[b] > 0.0) {
      for (const auto& p : noise_pts) noise_power.push_back(truth.noise_psd[b] * p.weight / kFourPi);
      noise_steer = steering(noise_dirs, k, geometry, true);
    }
    for (int t = 0; t < frames; ++t) {
      cplx* p = &out.mixture.data[out.mixture.offset(t, b)];
      cplx origin = 0.0;
      for (int l = 0; l < n_src; ++l) {
        const cplx s = src_spec[l].at(t, b, 0);
        origin += s * centre[b][l];
        for (int q = 0; q < mics; ++q) p[q] += steer[b][l][q] * s;
      }
      if (!rev_power.empty()) {
        std::mt19937_64 rng(mix_seed(config.seed, kReverbGains, t, b));
        origin += add_random_field(rev_steer, rev_power, rng, p);
      }
      if (!noise_power.empty()) {
        std::mt19937_64 rng(mix_seed(config.seed, kNoiseGains, t, b));
        origin += add_random_field(noise_steer, noise_power, rng, p);
      }
      if (config.sensor_noise_psd > 0.0) {
        std::mt19937_64 rng(mix_seed(config.seed, kSensor, t, b));
        for (int q = 0; q < mics; ++q) p[q] += cgauss(rng, config.sensor_noise_psd);
      }
      out.origin_spectra[static_cast<std::size_t>(t) * bins + b] = origin;
    }
  });

  for (int l = 0; l < n_src; ++l) out.stems.push_back(istft_channel(out.stem_spectra[l], frames, stft, samples));
  out.origin_mixture = istft_channel(out.origin_spectra, frames, stft, samples);
  return out;
}

}  // namespace sphpsd
