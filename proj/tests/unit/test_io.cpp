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
#include <filesystem>
#include <fstream>

#include <catch_amalgamated.hpp>

#include "sphpsd/io.hpp"

using namespace sphpsd;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sphpsd_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("wav round trips") {
  WavData w;
  w.sample_rate = 16000.0;
  w.channels.assign(3, std::vector<double>(257));
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t n = 0; n < 257; ++n) w.channels[c][n] = 0.9 * std::sin(0.01 * (n + 1) * (c + 1));
  }
  const std::pair<SampleFormat, double> cases[] = {
      {SampleFormat::Pcm16, 1.0 / 32768.0}, {SampleFormat::Pcm24, 1.0 / 8388608.0}, {SampleFormat::Float32, 1e-7}};
  for (const auto& [fmt, tol] : cases) {
    const auto path = scratch("rt.wav").string();
    write_wav(path, w, fmt);
    const auto r = read_wav(path);
    CHECK(r.sample_rate == 16000.0);
    REQUIRE(r.channels.size() == 3);
    REQUIRE(r.length() == 257);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t n = 0; n < 257; ++n) CHECK(std::abs(r.channels[c][n] - w.channels[c][n]) <= tol);
    }
  }
  CHECK_THROWS_AS(read_wav(scratch("missing.wav").string()), ConfigError);
  std::ofstream(scratch("junk.wav")) << "not a wave file at all";
  CHECK_THROWS_AS(read_wav(scratch("junk.wav").string()), ConfigError);
}

TEST_CASE("csv and json round trips") {
  const std::vector<double> v = {1.0, -2.5, 1e-300, 3.141592653589793, 0.0, 7.0};
  const auto path = scratch("m.csv").string();
  write_matrix_csv(path, v, 2, 3, "frames x bins");
  int rows = 0, cols = 0;
  CHECK(read_matrix_csv(path, rows, cols) == v);
  CHECK(rows == 2);
  CHECK(cols == 3);

  const nlohmann::json j = {{"a", 1}, {"b", {1.5, 2.5}}};
  write_json(scratch("j.json").string(), j);
  CHECK(read_json(scratch("j.json").string()) == j);
  CHECK_THROWS_AS(read_json(scratch("none.json").string()), ConfigError);
}

TEST_CASE("geometry json") {
  const auto g = ArrayGeometry::icosahedral32();
  const auto back = geometry_from_json(geometry_to_json(g));
  CHECK(back.radius == g.radius);
  CHECK(back.kind == g.kind);
  REQUIRE(back.size() == 32);
  for (std::size_t q = 0; q < 32; ++q) {
    CHECK(back.mics[q].dir.theta == Approx(g.mics[q].dir.theta));
    CHECK(back.mics[q].weight == Approx(g.mics[q].weight));
  }

  nlohmann::json plain = {{"radius_m", 0.05}, {"kind", "open"},
                          {"mics", {{{"theta", 0.0}, {"phi", 0.0}}, {{"theta", kPi}, {"phi", 0.0}}}}};
  const auto p = geometry_from_json(plain);
  CHECK(p.kind == ArrayKind::Open);
  CHECK(p.mics[0].weight == Approx(kFourPi / 2));

  auto bad = plain;
  bad["colour"] = "red";
  CHECK_THROWS_AS(geometry_from_json(bad), ConfigError);
  bad = plain;
  bad["kind"] = "soft";
  CHECK_THROWS_AS(geometry_from_json(bad), ConfigError);
  bad = plain;
  bad["mics"][0]["weight"] = 1.0;
  CHECK_THROWS_AS(geometry_from_json(bad), ConfigError);

  try {
    load_geometry("/nonexistent/array.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/array.json") != std::string::npos);
  }
}

TEST_CASE("config json") {
  EstimatorConfig ec;
  ec.beta = 0.7;
  ec.reverb_order = 2;
  ec.floor.enabled = false;
  ec.floor.rule = OrderRule::Ceil;
  ec.model_floor_gain = true;
  const auto e2 = estimator_from_json(estimator_to_json(ec));
  CHECK(e2.beta == 0.7);
  CHECK(e2.reverb_order == 2);
  CHECK_FALSE(e2.floor.enabled);
  CHECK(e2.floor.rule == OrderRule::Ceil);
  CHECK(e2.model_floor_gain);
  CHECK_THROWS_AS(estimator_from_json({{"beta", 2.0}}), ConfigError);
  CHECK_THROWS_AS(estimator_from_json({{"betta", 0.5}}), ConfigError);
  CHECK_THROWS_AS(estimator_from_json({{"order_rule", "floor"}}), ConfigError);

  const auto d = direction_from_json({{"theta_deg", 90.0}, {"phi_deg", 180.0}});
  CHECK(d.theta == Approx(kPi / 2));
  CHECK(d.phi == Approx(kPi));

  SceneConfig sc;
  sc.seed = 42;
  sc.duration_s = 1.5;
  sc.sources = {{{0.6, 0.3}, {}, 1.0, ""}, {{1.6, 2.0}, 2.0, 0.5, ""}};
  sc.reverb.enabled = true;
  sc.reverb.drr_db = 6.0;
  sc.reverb.profile = {{{1, 0}, cplx(0.2, 0.0)}, {{2, 1}, cplx(0.05, 0.01)}};
  sc.noise.enabled = true;
  sc.noise.psd = 0.1;
  const auto back = scene_from_json(scene_to_json(sc));
  CHECK(back.seed == 42);
  CHECK(back.duration_s == 1.5);
  REQUIRE(back.sources.size() == 2);
  CHECK(*back.sources[1].range_m == 2.0);
  CHECK(back.sources[1].power == 0.5);
  CHECK(*back.reverb.drr_db == 6.0);
  REQUIRE(back.reverb.profile.size() == 2);
  CHECK(back.reverb.profile[1].second == cplx(0.05, 0.01));
  CHECK(back.reverb.profile_order() == 2);
  CHECK(back.noise.psd == 0.1);
  CHECK(scene_to_json(back) == scene_to_json(sc));

  auto j = scene_to_json(sc);
  j["version"] = 2;
  CHECK_THROWS_AS(scene_from_json(j), ConfigError);
  j = scene_to_json(sc);
  j["reverb"]["rooms"] = 3;
  CHECK_THROWS_AS(scene_from_json(j), ConfigError);

  const auto s = sources_from_json(nlohmann::json::array({{{"theta", 1.0}, {"phi", 2.0}, {"range_m", 1.2}}}));
  REQUIRE(s.size() == 1);
  CHECK(*s[0].range_m == 1.2);
}

TEST_CASE("spectra round trip exactly") {
  StftConfig cfg;
  StftSpectra s(cfg, 3, 2, 256);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = cplx(0.1 * i, -1.0 / (i + 1.0));
  const auto path = (std::filesystem::temp_directory_path() / "sphpsd_spec.bin").string();
  write_spectra(path, s);
  const auto r = read_spectra(path);
  CHECK(r.frames == 3);
  CHECK(r.channels == 2);
  CHECK(r.signal_length == 256);
  CHECK(r.config.fft_size == 128);
  CHECK(r.data == s.data);
  std::ofstream(path) << "junk";
  CHECK_THROWS_AS(read_spectra(path), ConfigError);
}
