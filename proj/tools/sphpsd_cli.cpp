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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphpsd/estimator.hpp"
#include "sphpsd/io.hpp"
#include "sphpsd/metrics.hpp"
#include "sphpsd/scene.hpp"
#include "sphpsd/separation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sphpsd;

namespace {

struct Options {
  std::string config;
  std::string geometry;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out = ".";
  std::string input;
  std::string psd_dir;
  std::string beamformer;
  bool no_noise_column = false;
  bool no_reverb_columns = false;
  bool bypass_wiener = false;
  bool dump_gains = false;
  std::string bessel_floor;
  std::string truth_dir;
  std::string estimate_dir;
  std::string separated_dir;
  double frequency_hz = 2000.0;
  int reverb_order = 1;
  int max_sources = 30;
};

struct RunConfig {
  std::string base_dir;
  ArrayGeometry geometry;
  EstimatorConfig estimator;
  std::optional<SceneConfig> scene;
  SourceSet sources;
  StftConfig stft;
  json separation = json::object();
};

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string indexed(const std::string& stem, int i, const std::string& ext) {
  return stem + "_" + std::to_string(i) + ext;
}

RunConfig load_run_config(const Options& o) {
  RunConfig rc;
  json j = json::object();
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw ConfigError("config file not found: " + o.config);
    j = read_json(o.config);
    rc.base_dir = fs::path(o.config).parent_path().string();
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::vector<std::string> allowed = {"version",     "geometry", "estimator", "scene",
                                                   "sources",     "num_sources", "stft",  "separation"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (j.value("version", 1) != 1) throw ConfigError("config.version must be 1");

  if (!o.geometry.empty()) {
    rc.geometry = load_geometry(o.geometry);
  } else if (j.contains("geometry") && j["geometry"].is_string()) {
    const fs::path p = j["geometry"].get<std::string>();
    rc.geometry = load_geometry(p.is_absolute() || rc.base_dir.empty() ? p.string() : (fs::path(rc.base_dir) / p).string());
  } else if (j.contains("geometry")) {
    rc.geometry = geometry_from_json(j["geometry"]);
  } else {
    rc.geometry = ArrayGeometry::icosahedral32();
  }
  rc.geometry.validate();

  if (j.contains("estimator")) rc.estimator = estimator_from_json(j["estimator"]);
  if (o.no_noise_column) rc.estimator.include_noise_column = false;
  if (o.no_reverb_columns) rc.estimator.include_reverb_columns = false;
  if (!o.bessel_floor.empty()) rc.estimator.floor.enabled = o.bessel_floor == "on";
  rc.estimator.validate();

  if (j.contains("scene")) {
    rc.scene = scene_from_json(j["scene"], rc.base_dir);
    if (o.seed) rc.scene->seed = *o.seed;
    rc.stft = rc.scene->stft;
  }
  if (j.contains("stft")) rc.stft = stft_from_json(j["stft"]);
  if (j.contains("sources")) {
    rc.sources = sources_from_json(j["sources"]);
  } else if (rc.scene) {
    rc.sources = rc.scene->source_set();
  }
  if (j.contains("num_sources")) {
    const int l = j["num_sources"].get<int>();
    if (l != static_cast<int>(rc.sources.size())) {
      throw ConfigError("config.num_sources is " + std::to_string(l) + " but " + std::to_string(rc.sources.size()) +
                        " DOAs are given");
    }
  }
  if (j.contains("separation")) rc.separation = j["separation"];
  return rc;
}

FrequencyGrid grid_of(const StftConfig& stft, const EstimatorConfig& est) {
  return {stft.sample_rate, stft.fft_size, est.speed_of_sound};
}

StftSpectra load_input(const std::string& path, const RunConfig& rc) {
  if (path.empty()) throw ConfigError("--input is required");
  if (!fs::exists(path)) throw ConfigError("input file not found: " + path);
  StftSpectra spectra;
  if (fs::path(path).extension() == ".spec") {
    spectra = read_spectra(path);
  } else {
    const auto wav = read_wav(path);
    if (wav.sample_rate != rc.stft.sample_rate) {
      throw ConfigError("input sample rate " + std::to_string(wav.sample_rate) + " differs from the configured " +
                        std::to_string(rc.stft.sample_rate));
    }
    spectra = stft_analyze(wav.channels, rc.stft);
  }
  if (spectra.channels != static_cast<int>(rc.geometry.size())) {
    throw ConfigError("input has " + std::to_string(spectra.channels) + " channels but the geometry has " +
                      std::to_string(rc.geometry.size()) + " microphones");
  }
  return spectra;
}

void write_frames_bins(const std::string& path, const std::vector<double>& v, int frames, int bins) {
  write_matrix_csv(path, v, frames, bins, "rows: frame, columns: bin");
}

std::vector<double> read_frames_bins(const std::string& path, int frames, int bins) {
  int rows = 0, cols = 0;
  auto v = read_matrix_csv(path, rows, cols);
  if (rows != frames || cols != bins) throw ConfigError("unexpected shape in " + path);
  return v;
}

json gamma_labels(int order) {
  json a = json::array();
  for (int v = 0; v <= order; ++v) {
    for (int u = -v; u <= v; ++u) a.push_back({{"v", v}, {"u", u}});
  }
  return a;
}

void write_gamma(const std::string& path, const std::vector<cplx>& gamma, int rows, int order) {
  const int m = num_modes(order);
  std::vector<double> flat;
  flat.reserve(gamma.size() * 2);
  for (const auto& g : gamma) {
    flat.push_back(g.real());
    flat.push_back(g.imag());
  }
  write_matrix_csv(path, flat, rows, 2 * m, "columns: re, im per (v, u) in ACN order");
}

int cmd_simulate(const Options& o) {
  auto rc = load_run_config(o);
  if (!rc.scene) throw ConfigError("simulate needs a 'scene' section in the config");
  const SceneConfig& scene = *rc.scene;
  fs::create_directories(path_in(o.out, "stems"));
  const auto r = render_scene(scene, rc.geometry, o.threads);
  const int frames = r.truth.frames, bins = r.truth.bins, n_src = r.truth.num_sources;

  write_wav(path_in(o.out, "mixture.wav"), {scene.stft.sample_rate, stft_synthesize(r.mixture)});
  write_spectra(path_in(o.out, "mixture.spec"), r.mixture);
  write_wav(path_in(o.out, "origin.wav"), {scene.stft.sample_rate, {r.origin_mixture}});
  for (int l = 0; l < n_src; ++l) {
    write_wav(path_in(o.out, "stems/" + indexed("source", l, ".wav")), {scene.stft.sample_rate, {r.stems[l]}});
    write_frames_bins(path_in(o.out, indexed("truth_source", l, ".csv")),
                      component(r.truth.source_psd, frames, bins, n_src, l), frames, bins);
  }
  write_matrix_csv(path_in(o.out, "truth_reverb.csv"), r.truth.reverb_psd, 1, bins, "columns: bin");
  write_matrix_csv(path_in(o.out, "truth_noise.csv"), r.truth.noise_psd, 1, bins, "columns: bin");
  write_gamma(path_in(o.out, "truth_gamma.csv"), r.truth.gamma, bins, r.truth.reverb_order);

  json manifest = {{"command", "simulate"},
                   {"version", 1},
                   {"scene", scene_to_json(scene)},
                   {"geometry", geometry_to_json(rc.geometry)},
                   {"frames", frames},
                   {"bins", bins},
                   {"num_sources", n_src},
                   {"sample_rate", scene.stft.sample_rate},
                   {"samples", r.mixture.signal_length},
                   {"reverb_order", r.truth.reverb_order},
                   {"gamma_targets", gamma_labels(r.truth.reverb_order)},
                   {"files",
                    {{"mixture", "mixture.wav"},
                     {"spectra", "mixture.spec"},
                     {"origin", "origin.wav"},
                     {"stems", "stems/source_<l>.wav"},
                     {"truth_source", "truth_source_<l>.csv"},
                     {"truth_reverb", "truth_reverb.csv"},
                     {"truth_noise", "truth_noise.csv"},
                     {"truth_gamma", "truth_gamma.csv"}}}};
  write_json(path_in(o.out, "manifest.json"), manifest);
  std::cout << "simulated " << n_src << " sources, " << frames << " frames into " << o.out << "\n";
  return 0;
}

struct Estimation {
  PsdEstimates psd;
  InvariantReport report;
  std::vector<BinDiagnostics> diagnostics;
};

Estimation run_estimator(const RunConfig& rc, const ModalFrames& modal, const FrequencyGrid& grid, int threads) {
  validate_sources(rc.sources);
  PsdEstimator est(rc.estimator, rc.sources, rc.geometry, grid);
  Estimation e;
  e.psd = est.run(modal, threads, &e.report);
  e.diagnostics = est.diagnostics();
  return e;
}

int cmd_estimate(const Options& o) {
  const auto rc = load_run_config(o);
  if (rc.sources.empty()) throw ConfigError("no source DOAs in the config");
  const auto spectra = load_input(o.input, rc);
  const auto grid = grid_of(spectra.config, rc.estimator);
  const auto modal = modal_coefficients(spectra, rc.geometry, grid, rc.estimator.floor, rc.estimator.max_order);
  const auto e = run_estimator(rc, modal, grid, o.threads);
  const auto& psd = e.psd;
  fs::create_directories(o.out);

  for (int l = 0; l < psd.num_sources; ++l) {
    write_frames_bins(path_in(o.out, indexed("psd_source", l, ".csv")),
                      component(psd.source, psd.frames, psd.bins, psd.num_sources, l), psd.frames, psd.bins);
  }
  write_frames_bins(path_in(o.out, "psd_reverb.csv"), psd.reverb, psd.frames, psd.bins);
  write_frames_bins(path_in(o.out, "psd_noise.csv"), psd.noise, psd.frames, psd.bins);
  write_gamma(path_in(o.out, "psd_gamma.csv"), psd.gamma, psd.frames * psd.bins, psd.reverb_order);

  std::vector<double> diag;
  json under = json::array();
  for (const auto& d : e.diagnostics) {
    diag.insert(diag.end(), {static_cast<double>(d.bin), d.frequency_hz, static_cast<double>(d.order),
                             static_cast<double>(d.rows), static_cast<double>(d.cols), static_cast<double>(d.rank),
                             d.condition, d.noise_column ? 1.0 : 0.0, d.underdetermined ? 1.0 : 0.0});
    if (d.underdetermined) under.push_back(d.bin);
  }
  write_matrix_csv(path_in(o.out, "diagnostics.csv"), diag, static_cast<int>(e.diagnostics.size()), 9,
                   "bin,frequency_hz,order,rows,cols,rank,condition,noise_column,underdetermined");
  if (!under.empty()) std::cerr << "warning: " << under.size() << " underdetermined bins, solved by pseudo-inverse\n";

  json manifest = {{"command", "estimate"},
                   {"version", 1},
                   {"input", o.input},
                   {"estimator", estimator_to_json(rc.estimator)},
                   {"sources", sources_to_json(rc.sources)},
                   {"geometry", geometry_to_json(rc.geometry)},
                   {"stft", stft_to_json(spectra.config)},
                   {"frames", psd.frames},
                   {"bins", psd.bins},
                   {"num_sources", psd.num_sources},
                   {"reverb_order", psd.reverb_order},
                   {"sample_rate", spectra.config.sample_rate},
                   {"underdetermined_bins", under},
                   {"invariants",
                    {{"frames_checked", e.report.frames_checked},
                     {"max_hermitian_error", e.report.max_hermitian_error},
                     {"min_diagonal", e.report.min_diagonal},
                     {"min_rectified", e.report.min_rectified}}},
                   {"files",
                    {{"source", "psd_source_<l>.csv"},
                     {"reverb", "psd_reverb.csv"},
                     {"noise", "psd_noise.csv"},
                     {"gamma", "psd_gamma.csv"},
                     {"diagnostics", "diagnostics.csv"}}}};
  write_json(path_in(o.out, "manifest.json"), manifest);
  std::cout << "estimated " << psd.num_sources << " source PSDs over " << psd.frames << " frames into " << o.out
            << "\n";
  return 0;
}

PsdEstimates load_estimates(const std::string& dir, int frames, int bins, int n_src) {
  const auto m = read_json(path_in(dir, "manifest.json"));
  if (m.value("command", "") != "estimate") throw ConfigError("not an estimate directory: " + dir);
  if (m.at("frames").get<int>() != frames || m.at("bins").get<int>() != bins ||
      m.at("num_sources").get<int>() != n_src) {
    throw ConfigError("precomputed PSDs in " + dir + " do not match the input and source set");
  }
  const int order = m.at("reverb_order").get<int>();
  PsdEstimates psd(frames, bins, n_src, order);
  for (int l = 0; l < n_src; ++l) {
    const auto v = read_frames_bins(path_in(dir, indexed("psd_source", l, ".csv")), frames, bins);
    for (std::size_t i = 0; i < v.size(); ++i) psd.source[i * n_src + l] = v[i];
  }
  psd.noise = read_frames_bins(path_in(dir, "psd_noise.csv"), frames, bins);
  psd.reverb = read_frames_bins(path_in(dir, "psd_reverb.csv"), frames, bins);
  int rows = 0, cols = 0;
  const auto g = read_matrix_csv(path_in(dir, "psd_gamma.csv"), rows, cols);
  if (rows != frames * bins || cols != 2 * num_modes(order)) throw ConfigError("unexpected shape in psd_gamma.csv");
  for (std::size_t i = 0; i < psd.gamma.size(); ++i) psd.gamma[i] = {g[2 * i], g[2 * i + 1]};
  return psd;
}

int cmd_separate(const Options& o) {
  const auto rc = load_run_config(o);
  if (rc.sources.empty()) throw ConfigError("no source DOAs in the config");
  const auto spectra = load_input(o.input, rc);
  const auto grid = grid_of(spectra.config, rc.estimator);
  const auto modal = modal_coefficients(spectra, rc.geometry, grid, rc.estimator.floor, rc.estimator.max_order);
  const int n_src = static_cast<int>(rc.sources.size());

  SeparationOptions opt;
  opt.threads = o.threads;
  std::string beam = o.beamformer.empty() ? rc.separation.value("beamformer", "md") : o.beamformer;
  if (beam != "md" && beam != "ds") throw ConfigError("beamformer must be md or ds");
  opt.beamformer = beam == "md" ? BeamformerKind::MaxDirectivity : BeamformerKind::DelaySum;
  opt.bypass_wiener = o.bypass_wiener || rc.separation.value("bypass_wiener", false);
  opt.gain_floor = rc.separation.value("gain_floor", 0.0);

  const PsdEstimates psd = o.psd_dir.empty() ? run_estimator(rc, modal, grid, o.threads).psd
                                             : load_estimates(o.psd_dir, modal.frames, modal.bins, n_src);
  const auto sep = separate_sources(modal, rc.sources, psd, rc.geometry, grid, spectra.config, spectra.signal_length, opt);
  fs::create_directories(o.out);
  for (int l = 0; l < n_src; ++l) {
    write_wav(path_in(o.out, indexed("source", l, ".wav")), {spectra.config.sample_rate, {sep.signals[l]}});
    if (o.dump_gains) write_frames_bins(path_in(o.out, indexed("gain", l, ".csv")), sep.gains[l], sep.frames, sep.bins);
  }
  json manifest = {{"command", "separate"},
                   {"version", 1},
                   {"input", o.input},
                   {"psd", o.psd_dir.empty() ? "fresh" : o.psd_dir},
                   {"beamformer", beam},
                   {"bypass_wiener", opt.bypass_wiener},
                   {"gain_floor", opt.gain_floor},
                   {"estimator", estimator_to_json(rc.estimator)},
                   {"sources", sources_to_json(rc.sources)},
                   {"frames", sep.frames},
                   {"bins", sep.bins},
                   {"num_sources", n_src},
                   {"samples", spectra.signal_length},
                   {"sample_rate", spectra.config.sample_rate},
                   {"files", {{"stems", "source_<l>.wav"}, {"gains", o.dump_gains ? "gain_<l>.csv" : ""}}}};
  write_json(path_in(o.out, "manifest.json"), manifest);
  std::cout << "separated " << n_src << " sources into " << o.out << "\n";
  return 0;
}

json read_manifest(const std::string& dir, const std::string& command) {
  const auto path = path_in(dir, "manifest.json");
  if (!fs::exists(path)) throw ConfigError("manifest not found: " + path);
  auto m = read_json(path);
  if (m.value("command", "") != command) throw ConfigError(path + " is not a " + command + " manifest");
  return m;
}

void require_match(const json& a, const json& b, const char* key, const std::string& what) {
  if (a.at(key) != b.at(key)) {
    throw ConfigError("manifest mismatch on '" + std::string(key) + "' between truth and " + what + ": " +
                      a.at(key).dump() + " vs " + b.at(key).dump());
  }
}

std::vector<double> mono(const std::string& path) {
  const auto w = read_wav(path);
  if (w.channels.size() != 1) throw ConfigError("expected a mono WAV: " + path);
  return w.channels.front();
}

int cmd_eval(const Options& o) {
  if (o.truth_dir.empty() || (o.estimate_dir.empty() && o.separated_dir.empty())) {
    throw ConfigError("eval needs --truth and at least one of --estimate, --separated");
  }
  const auto truth = read_manifest(o.truth_dir, "simulate");
  const int frames = truth.at("frames"), bins = truth.at("bins"), n_src = truth.at("num_sources");
  const double fs_hz = truth.at("sample_rate");
  json report = {{"command", "eval"}, {"version", 1}, {"truth", o.truth_dir}};
  fs::create_directories(o.out);

  if (!o.estimate_dir.empty()) {
    const auto est = read_manifest(o.estimate_dir, "estimate");
    for (const char* key : {"frames", "bins", "num_sources", "sample_rate"}) require_match(truth, est, key, "estimate");
    const double beta = est.at("estimator").at("beta");
    const auto psd = load_estimates(o.estimate_dir, frames, bins, n_src);
    std::vector<std::vector<double>> traces;
    json per_source = json::array();
    for (int l = 0; l < n_src; ++l) {
      const auto t = ewma_frames(read_frames_bins(path_in(o.truth_dir, indexed("truth_source", l, ".csv")), frames, bins),
                                 frames, bins, beta);
      const auto r = psd_error_report(t, component(psd.source, frames, bins, n_src, l), frames, bins);
      per_source.push_back(r.db);
      traces.push_back(r.per_bin);
    }
    report["phi_err_db"] = {{"sources", per_source}};
    auto broadcast = [&](const std::string& name) {
      int rows = 0, cols = 0;
      const auto row = read_matrix_csv(path_in(o.truth_dir, name), rows, cols);
      if (rows != 1 || cols != bins) throw ConfigError("unexpected shape in " + name);
      std::vector<double> v(static_cast<std::size_t>(frames) * bins);
      for (int t = 0; t < frames; ++t) std::copy(row.begin(), row.end(), v.begin() + static_cast<std::ptrdiff_t>(t) * bins);
      return v;
    };
    const std::vector<double> nan_trace(static_cast<std::size_t>(bins), std::nan(""));
    for (const auto& [name, file, estimate] :
         {std::tuple{"reverb", "truth_reverb.csv", psd.reverb}, std::tuple{"noise", "truth_noise.csv", psd.noise}}) {
      const auto t = broadcast(file);
      if (std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; })) {
        report["phi_err_db"][name] = nullptr;
        traces.push_back(nan_trace);
        continue;
      }
      const auto r = psd_error_report(t, estimate, frames, bins);
      report["phi_err_db"][name] = r.db;
      traces.push_back(r.per_bin);
    }
    std::vector<double> table;
    for (int b = 0; b < bins; ++b) {
      table.push_back(b);
      table.push_back(b * fs_hz / (2.0 * (bins - 1)));
      for (const auto& tr : traces) table.push_back(tr[b]);
    }
    std::string header = "bin,frequency_hz";
    for (int l = 0; l < n_src; ++l) header += ",source_" + std::to_string(l);
    header += ",reverb,noise";
    write_matrix_csv(path_in(o.out, "eval_per_bin.csv"), table, bins, 2 + static_cast<int>(traces.size()), header);

    int rows = 0, cols = 0;
    const auto diag = read_matrix_csv(path_in(o.estimate_dir, "diagnostics.csv"), rows, cols);
    double max_cond = 0.0;
    int under = 0, singular = 0;
    for (int r = 0; r < rows; ++r) {
      const double c = diag[static_cast<std::size_t>(r) * cols + 6];
      if (std::isfinite(c)) {
        max_cond = std::max(max_cond, c);
      } else {
        ++singular;
      }
      under += diag[static_cast<std::size_t>(r) * cols + 8] > 0.5;
    }
    report["conditioning"] = {
        {"max_finite_condition", max_cond}, {"singular_bins", singular}, {"underdetermined_bins", under}};
    report["estimate"] = o.estimate_dir;
  }

  if (!o.separated_dir.empty()) {
    const auto sep = read_manifest(o.separated_dir, "separate");
    for (const char* key : {"num_sources", "sample_rate", "samples"}) require_match(truth, sep, key, "separation");
    std::vector<std::vector<double>> stems;
    for (int l = 0; l < n_src; ++l) stems.push_back(mono(path_in(o.truth_dir, "stems/" + indexed("source", l, ".wav"))));
    const auto mixture = mono(path_in(o.truth_dir, "origin.wav"));
    json sir = json::array(), snr = json::array();
    for (int l = 0; l < n_src; ++l) {
      const auto r = sir_snr_improvement(mono(path_in(o.separated_dir, indexed("source", l, ".wav"))), stems, l, mixture);
      sir.push_back(r.sir_gain_db);
      snr.push_back(r.snr_gain_db);
    }
    report["separation"] = {{"sir_gain_db", sir}, {"snr_gain_db", snr}, {"directory", o.separated_dir}};
  }
  write_json(path_in(o.out, "report.json"), report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_condsweep(const Options& o) {
  const auto rc = load_run_config(o);
  EstimatorConfig ec = rc.estimator;
  ec.reverb_order = o.reverb_order;
  ec.model_floor_gain = false;
  const double k = 2.0 * kPi * o.frequency_hz / ec.speed_of_sound;
  std::vector<double> table;
  for (int l = 2; l <= o.max_sources; ++l) {
    SourceSet s;
    for (const auto& d : fibonacci_directions(l)) s.push_back({d, {}});
    table.push_back(l);
    for (int order : {2, 4}) table.push_back(condition_number(build_translation_matrix(ec, s, order, k, rc.geometry)));
  }
  fs::create_directories(o.out);
  write_matrix_csv(path_in(o.out, "condition_sweep.csv"), table, o.max_sources - 1, 3, "sources,cond_N2,cond_N4");
  std::cout << "wrote " << path_in(o.out, "condition_sweep.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spherical-array PSD estimation and source separation"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Run configuration JSON");
    c->add_option("--geometry", o.geometry, "Array geometry JSON, overrides the config");
    c->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    c->add_option("--out", o.out, "Output directory");
  };
  auto estimation = [&](CLI::App* c) {
    c->add_option("--input", o.input, "Mixture WAV or .spec spectra");
    c->add_flag("--no-noise-column", o.no_noise_column, "Drop the diffuse-noise column");
    c->add_flag("--no-reverb-columns", o.no_reverb_columns, "Drop the reverberation columns");
    c->add_option("--bessel-floor", o.bessel_floor, "Bessel floors")->check(CLI::IsMember({"on", "off"}));
  };

  auto* sim = app.add_subcommand("simulate", "Render a scene to a multichannel WAV and ground truth");
  common(sim);
  sim->add_option("--seed", o.seed, "Scene seed, overrides the config");

  auto* est = app.add_subcommand("estimate", "Estimate source, reverberation and noise PSDs");
  common(est);
  estimation(est);

  auto* sep = app.add_subcommand("separate", "Beamform and Wiener-filter each source");
  common(sep);
  estimation(sep);
  sep->add_option("--psd", o.psd_dir, "Use precomputed PSDs from an estimate directory");
  sep->add_option("--beamformer", o.beamformer, "Beamformer")->check(CLI::IsMember({"md", "ds"}));
  sep->add_flag("--bypass-wiener", o.bypass_wiener, "Output the raw beamformer signals");
  sep->add_flag("--gains", o.dump_gains, "Write the Wiener gains as CSV");

  auto* ev = app.add_subcommand("eval", "Score estimates and separations against ground truth");
  ev->add_option("--truth", o.truth_dir, "simulate output directory")->required();
  ev->add_option("--estimate", o.estimate_dir, "estimate output directory");
  ev->add_option("--separated", o.separated_dir, "separate output directory");
  ev->add_option("--out", o.out, "Output directory");

  auto* cs = app.add_subcommand("condsweep", "Condition number of T against the number of sources");
  common(cs);
  cs->add_option("--frequency", o.frequency_hz, "Frequency in Hz")->check(CLI::PositiveNumber);
  cs->add_option("--reverb-order", o.reverb_order, "Reverberation order V")->check(CLI::NonNegativeNumber);
  cs->add_option("--max-sources", o.max_sources, "Largest source count")->check(CLI::Range(2, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*est) return cmd_estimate(o);
    if (*sep) return cmd_separate(o);
    if (*ev) return cmd_eval(o);
    return cmd_condsweep(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
