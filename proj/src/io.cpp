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

#include "sphpsd/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace sphpsd {

using nlohmann::json;

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).string();
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open WAV file: " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw ConfigError("not a RIFF/WAVE file: " + path);
  }
  int format = 0, channels = 0, bits = 0;
  double rate = 0.0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::size_t len = rd_u32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    if (pos + 8 + len > bytes.size()) throw ConfigError("truncated WAV chunk: " + path);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (len < 16) throw ConfigError("short fmt chunk: " + path);
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
      if (format == 0xFFFE && len >= 26) format = rd_u16(body + 24);
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (!data || channels <= 0) throw ConfigError("WAV file lacks fmt or data chunk: " + path);
  const bool pcm = format == 1 && (bits == 16 || bits == 24 || bits == 32);
  const bool flt = format == 3 && bits == 32;
  if (!pcm && !flt) throw ConfigError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                      std::to_string(bits) + " bit): " + path);
  const std::size_t width = static_cast<std::size_t>(bits / 8);
  const std::size_t frames = data_len / (width * channels);
  WavData w;
  w.sample_rate = rate;
  w.channels.assign(static_cast<std::size_t>(channels), std::vector<double>(frames));
  for (std::size_t n = 0; n < frames; ++n) {
    for (int c = 0; c < channels; ++c) {
      const unsigned char* s = data + (n * channels + c) * width;
      double v = 0.0;
      if (flt) {
        float f;
        const std::uint32_t u = rd_u32(s);
        std::memcpy(&f, &u, 4);
        v = f;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(rd_u16(s)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(rd_u32(s)) / 2147483648.0;
      }
      w.channels[c][n] = v;
    }
  }
  return w;
}

void write_wav(const std::string& path, const WavData& wav, SampleFormat format) {
  if (wav.channels.empty()) throw ArgumentError("no channels to write");
  const std::size_t frames = wav.length();
  for (const auto& c : wav.channels) {
    if (c.size() != frames) throw ArgumentError("channels differ in length");
  }
  const int channels = static_cast<int>(wav.channels.size());
  const int bits = format == SampleFormat::Pcm16 ? 16 : format == SampleFormat::Pcm24 ? 24 : 32;
  const int width = bits / 8;
  const auto data_len = static_cast<std::uint32_t>(frames * channels * width);
  std::string s;
  s.reserve(44 + data_len);
  s += "RIFF";
  put_u32(s, 36 + data_len);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, format == SampleFormat::Float32 ? 3 : 1);
  put_u16(s, static_cast<std::uint16_t>(channels));
  const auto rate = static_cast<std::uint32_t>(std::lround(wav.sample_rate));
  put_u32(s, rate);
  put_u32(s, rate * channels * width);
  put_u16(s, static_cast<std::uint16_t>(channels * width));
  put_u16(s, static_cast<std::uint16_t>(bits));
  s += "data";
  put_u32(s, data_len);
  for (std::size_t n = 0; n < frames; ++n) {
    for (int c = 0; c < channels; ++c) {
      const double v = wav.channels[c][n];
      if (format == SampleFormat::Float32) {
        const float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(s, u);
      } else if (format == SampleFormat::Pcm16) {
        const auto x = static_cast<std::int16_t>(std::lround(std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0));
        put_u16(s, static_cast<std::uint16_t>(x));
      } else {
        const auto x = static_cast<std::int32_t>(std::lround(std::clamp(v, -1.0, 8388607.0 / 8388608.0) * 8388608.0));
        for (int i = 0; i < 3; ++i) s.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write WAV file: " + path);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_spectra(const std::string& path, const StftSpectra& spectra) {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  const auto& c = spectra.config;
  const std::int32_t head[5] = {c.window_length, c.hop, c.fft_size, spectra.frames, spectra.channels};
  const std::uint64_t length = spectra.signal_length;
  out.write("SPHSPEC1", 8);
  out.write(reinterpret_cast<const char*>(head), sizeof(head));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(reinterpret_cast<const char*>(&c.sample_rate), sizeof(double));
  out.write(reinterpret_cast<const char*>(spectra.data.data()),
            static_cast<std::streamsize>(spectra.data.size() * sizeof(cplx)));
}

StftSpectra read_spectra(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open spectra file: " + path);
  char magic[8];
  std::int32_t head[5];
  std::uint64_t length = 0;
  StftConfig c;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(head), sizeof(head));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  in.read(reinterpret_cast<char*>(&c.sample_rate), sizeof(double));
  if (!in || std::memcmp(magic, "SPHSPEC1", 8) != 0) throw ConfigError("not a spectra file: " + path);
  c.window_length = head[0];
  c.hop = head[1];
  c.fft_size = head[2];
  c.validate();
  if (head[3] < 0 || head[4] <= 0) throw ConfigError("bad spectra dimensions: " + path);
  StftSpectra s(c, head[3], head[4], length);
  in.read(reinterpret_cast<char*>(s.data.data()), static_cast<std::streamsize>(s.data.size() * sizeof(cplx)));
  if (!in) throw ConfigError("truncated spectra file: " + path);
  return s;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << value.dump(2) << "\n";
}

void write_matrix_csv(const std::string& path, const std::vector<double>& values, int rows, int cols,
                      const std::string& header) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) throw ArgumentError("CSV shape mismatch");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  if (!header.empty()) out << "# " << header << "\n";
  out << std::setprecision(17);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << values[static_cast<std::size_t>(r) * cols + c];
    }
    out << '\n';
  }
}

std::vector<double> read_matrix_csv(const std::string& path, int& rows, int& cols) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::vector<double> values;
  rows = 0;
  cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    int n = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("non-numeric CSV cell in " + path);
      }
      ++n;
    }
    if (cols >= 0 && n != cols) throw ConfigError("ragged CSV rows in " + path);
    cols = n;
    ++rows;
  }
  if (cols < 0) cols = 0;
  return values;
}

Direction direction_from_json(const json& j) {
  check_keys(j, {"theta", "phi", "theta_deg", "phi_deg"}, "direction");
  Direction d;
  if (j.contains("theta_deg") || j.contains("phi_deg")) {
    d.theta = get_or<double>(j, "theta_deg", 0.0, "direction") * kPi / 180.0;
    d.phi = get_or<double>(j, "phi_deg", 0.0, "direction") * kPi / 180.0;
  } else {
    if (!j.contains("theta") || !j.contains("phi")) throw ConfigError("direction needs theta and phi");
    d.theta = get_or<double>(j, "theta", 0.0, "direction");
    d.phi = get_or<double>(j, "phi", 0.0, "direction");
  }
  if (d.theta < 0.0 || d.theta > kPi) throw ConfigError("direction colatitude outside [0, pi]");
  d.phi = std::fmod(d.phi, 2.0 * kPi);
  if (d.phi < 0.0) d.phi += 2.0 * kPi;
  return d;
}

json direction_to_json(const Direction& d) { return {{"theta", d.theta}, {"phi", d.phi}}; }

ArrayGeometry geometry_from_json(const json& j) {
  check_keys(j, {"radius_m", "kind", "mics", "name"}, "geometry");
  ArrayGeometry g;
  g.radius = get_or<double>(j, "radius_m", 0.0, "geometry");
  const auto kind = get_or<std::string>(j, "kind", "rigid", "geometry");
  if (kind == "open") g.kind = ArrayKind::Open;
  else if (kind == "rigid") g.kind = ArrayKind::Rigid;
  else throw ConfigError("geometry.kind must be \"open\" or \"rigid\"");
  if (!j.contains("mics") || !j["mics"].is_array()) throw ConfigError("geometry.mics must be an array");
  bool any_weight = false, all_weight = true;
  for (const auto& m : j["mics"]) {
    check_keys(m, {"theta", "phi", "weight"}, "geometry.mics[]");
    Microphone mic;
    mic.dir = direction_from_json({{"theta", m.value("theta", -1.0)}, {"phi", m.value("phi", 0.0)}});
    if (m.contains("weight")) {
      mic.weight = m["weight"].get<double>();
      any_weight = true;
    } else {
      all_weight = false;
    }
    g.mics.push_back(mic);
  }
  if (any_weight && !all_weight) throw ConfigError("geometry: give weights for every microphone or for none");
  if (!any_weight) {
    for (auto& m : g.mics) m.weight = kFourPi / static_cast<double>(g.mics.size());
  }
  g.validate();
  return g;
}

json geometry_to_json(const ArrayGeometry& g) {
  json mics = json::array();
  for (const auto& m : g.mics) mics.push_back({{"theta", m.dir.theta}, {"phi", m.dir.phi}, {"weight", m.weight}});
  return {{"radius_m", g.radius}, {"kind", g.kind == ArrayKind::Open ? "open" : "rigid"}, {"mics", mics}};
}

ArrayGeometry load_geometry(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("geometry file not found: " + path);
  return geometry_from_json(read_json(path));
}

SourceSet sources_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("sources must be an array");
  SourceSet s;
  for (const auto& e : j) {
    check_keys(e, {"theta", "phi", "theta_deg", "phi_deg", "range_m", "power", "wav"}, "sources[]");
    json dir = json::object();
    for (const char* k : {"theta", "phi", "theta_deg", "phi_deg"}) {
      if (e.contains(k)) dir[k] = e[k];
    }
    Source src{direction_from_json(dir), {}};
    if (e.contains("range_m") && !e["range_m"].is_null()) src.range_m = e["range_m"].get<double>();
    s.push_back(src);
  }
  validate_sources(s);
  return s;
}

json sources_to_json(const SourceSet& s) {
  json a = json::array();
  for (const auto& src : s) {
    json e = direction_to_json(src.doa);
    if (src.range_m) e["range_m"] = *src.range_m;
    a.push_back(e);
  }
  return a;
}

StftConfig stft_from_json(const json& j, StftConfig c) {
  check_keys(j, {"window_length", "hop", "fft_size", "sample_rate"}, "stft");
  c.window_length = get_or<int>(j, "window_length", c.window_length, "stft");
  c.hop = get_or<int>(j, "hop", c.hop, "stft");
  c.fft_size = get_or<int>(j, "fft_size", c.fft_size, "stft");
  c.sample_rate = get_or<double>(j, "sample_rate", c.sample_rate, "stft");
  c.validate();
  return c;
}

json stft_to_json(const StftConfig& c) {
  return {{"window_length", c.window_length}, {"hop", c.hop}, {"fft_size", c.fft_size}, {"sample_rate", c.sample_rate}};
}

EstimatorConfig estimator_from_json(const json& j, EstimatorConfig c) {
  const std::string w = "estimator";
  check_keys(j, {"reverb_order", "beta", "noise_band_hz", "rectify", "svd_tolerance", "include_noise_column",
                 "include_reverb_columns", "max_order", "speed_of_sound", "n_min", "b_floor", "bessel_floor", "order_rule",
                 "model_floor_gain"},
             w);
  c.reverb_order = get_or<int>(j, "reverb_order", c.reverb_order, w);
  c.beta = get_or<double>(j, "beta", c.beta, w);
  c.noise_band_hz = get_or<double>(j, "noise_band_hz", c.noise_band_hz, w);
  c.rectify = get_or<bool>(j, "rectify", c.rectify, w);
  c.svd_tolerance = get_or<double>(j, "svd_tolerance", c.svd_tolerance, w);
  c.include_noise_column = get_or<bool>(j, "include_noise_column", c.include_noise_column, w);
  c.include_reverb_columns = get_or<bool>(j, "include_reverb_columns", c.include_reverb_columns, w);
  c.max_order = get_or<int>(j, "max_order", c.max_order, w);
  c.speed_of_sound = get_or<double>(j, "speed_of_sound", c.speed_of_sound, w);
  c.floor.n_min = get_or<int>(j, "n_min", c.floor.n_min, w);
  c.floor.b_floor = get_or<double>(j, "b_floor", c.floor.b_floor, w);
  c.floor.enabled = get_or<bool>(j, "bessel_floor", c.floor.enabled, w);
  if (j.contains("order_rule")) {
    const auto rule = get_or<std::string>(j, "order_rule", "", w);
    if (rule == "exp_half") {
      c.floor.rule = OrderRule::ExpHalf;
    } else if (rule == "ceil") {
      c.floor.rule = OrderRule::Ceil;
    } else {
      throw ConfigError("estimator.order_rule must be \"exp_half\" or \"ceil\"");
    }
  }
  c.model_floor_gain = get_or<bool>(j, "model_floor_gain", c.model_floor_gain, w);
  c.validate();
  return c;
}

json estimator_to_json(const EstimatorConfig& c) {
  return {{"reverb_order", c.reverb_order},
          {"beta", c.beta},
          {"noise_band_hz", c.noise_band_hz},
          {"rectify", c.rectify},
          {"svd_tolerance", c.svd_tolerance},
          {"include_noise_column", c.include_noise_column},
          {"include_reverb_columns", c.include_reverb_columns},
          {"max_order", c.max_order},
          {"speed_of_sound", c.speed_of_sound},
          {"n_min", c.floor.n_min},
          {"b_floor", c.floor.b_floor},
          {"bessel_floor", c.floor.enabled},
          {"order_rule", c.floor.rule == OrderRule::Ceil ? "ceil" : "exp_half"},
          {"model_floor_gain", c.model_floor_gain}};
}

SceneConfig scene_from_json(const json& j, const std::string& base_dir) {
  const std::string w = "scene";
  check_keys(j, {"version", "seed", "duration_s", "speed_of_sound", "stft", "sources", "reverb", "noise",
                 "sensor_noise_psd"},
             w);
  if (get_or<int>(j, "version", 1, w) != 1) throw ConfigError("scene.version must be 1");
  SceneConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, w);
  c.duration_s = get_or<double>(j, "duration_s", c.duration_s, w);
  c.speed_of_sound = get_or<double>(j, "speed_of_sound", c.speed_of_sound, w);
  c.sensor_noise_psd = get_or<double>(j, "sensor_noise_psd", c.sensor_noise_psd, w);
  if (j.contains("stft")) c.stft = stft_from_json(j["stft"]);
  if (!j.contains("sources")) throw ConfigError("scene.sources is required");
  const auto set = sources_from_json(j["sources"]);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& e = j["sources"][i];
    SourceSpec s;
    s.doa = set[i].doa;
    s.range_m = set[i].range_m;
    s.power = get_or<double>(e, "power", 1.0, "scene.sources[]");
    s.wav_path = resolve(get_or<std::string>(e, "wav", "", "scene.sources[]"), base_dir);
    c.sources.push_back(s);
  }
  if (j.contains("reverb")) {
    const auto& r = j["reverb"];
    const std::string rw = "scene.reverb";
    check_keys(r, {"enabled", "psd", "drr_db", "grid_order", "profile"}, rw);
    c.reverb.enabled = get_or<bool>(r, "enabled", true, rw);
    c.reverb.psd = get_or<double>(r, "psd", 0.0, rw);
    if (r.contains("drr_db")) c.reverb.drr_db = r["drr_db"].get<double>();
    c.reverb.grid_order = get_or<int>(r, "grid_order", c.reverb.grid_order, rw);
    if (r.contains("profile")) {
      for (const auto& e : r["profile"]) {
        check_keys(e, {"v", "u", "re", "im"}, rw + ".profile[]");
        c.reverb.profile.push_back({{e.at("v").get<int>(), e.at("u").get<int>()},
                                    {e.value("re", 0.0), e.value("im", 0.0)}});
      }
    }
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    const std::string nw = "scene.noise";
    check_keys(n, {"enabled", "psd", "snr_db", "band_hz", "grid_order"}, nw);
    c.noise.enabled = get_or<bool>(n, "enabled", true, nw);
    c.noise.psd = get_or<double>(n, "psd", 0.0, nw);
    if (n.contains("snr_db")) c.noise.snr_db = n["snr_db"].get<double>();
    c.noise.band_hz = get_or<double>(n, "band_hz", c.noise.band_hz, nw);
    c.noise.grid_order = get_or<int>(n, "grid_order", c.noise.grid_order, nw);
  }
  c.validate();
  return c;
}

json scene_to_json(const SceneConfig& c) {
  json sources = json::array();
  for (const auto& s : c.sources) {
    json e = direction_to_json(s.doa);
    if (s.range_m) e["range_m"] = *s.range_m;
    e["power"] = s.power;
    if (!s.wav_path.empty()) e["wav"] = s.wav_path;
    sources.push_back(e);
  }
  json profile = json::array();
  for (const auto& [idx, v] : c.reverb.profile) profile.push_back({{"v", idx.n}, {"u", idx.m}, {"re", v.real()}, {"im", v.imag()}});
  json reverb = {{"enabled", c.reverb.enabled}, {"psd", c.reverb.psd}, {"grid_order", c.reverb.grid_order},
                 {"profile", profile}};
  if (c.reverb.drr_db) reverb["drr_db"] = *c.reverb.drr_db;
  json noise = {{"enabled", c.noise.enabled}, {"psd", c.noise.psd}, {"band_hz", c.noise.band_hz},
                {"grid_order", c.noise.grid_order}};
  if (c.noise.snr_db) noise["snr_db"] = *c.noise.snr_db;
  return {{"version", 1},
          {"seed", c.seed},
          {"duration_s", c.duration_s},
          {"speed_of_sound", c.speed_of_sound},
          {"stft", stft_to_json(c.stft)},
          {"sources", sources},
          {"reverb", reverb},
          {"noise", noise},
          {"sensor_noise_psd", c.sensor_noise_psd}};
}

}  // namespace sphpsd
