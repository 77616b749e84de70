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

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sphpsd/estimator.hpp"
#include "sphpsd/io.hpp"
#include "sphpsd/metrics.hpp"
#include "sphpsd/scene.hpp"
#include "sphpsd/separation.hpp"

namespace py = pybind11;
using namespace sphpsd;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v, std::vector<py::ssize_t> shape) {
  py::array_t<T> a(shape);
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

SourceSet to_sources(const std::vector<std::vector<double>>& rows) {
  SourceSet s;
  for (const auto& r : rows) {
    if (r.size() != 2 && r.size() != 3) throw ArgumentError("a source is (theta, phi) or (theta, phi, range_m)");
    Source src{{r[0], r[1]}, {}};
    if (r.size() == 3) src.range_m = r[2];
    s.push_back(src);
  }
  return s;
}

StftSpectra spectra_from_array(py::array_t<cplx, py::array::c_style | py::array::forcecast> a, const StftConfig& cfg,
                               std::size_t length) {
  if (a.ndim() != 3 || a.shape(1) != cfg.num_bins()) throw ArgumentError("spectra must be (frames, bins, channels)");
  StftSpectra s(cfg, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)), length);
  std::copy(a.data(), a.data() + a.size(), s.data.begin());
  return s;
}

py::array_t<cplx> spectra_to_array(const StftSpectra& s) { return to_array(s.data, {s.frames, s.bins, s.channels}); }

py::dict psd_to_dict(const PsdEstimates& p) {
  py::dict d;
  d["sources"] = to_array(p.source, {p.frames, p.bins, p.num_sources});
  d["reverb"] = to_array(p.reverb, {p.frames, p.bins});
  d["noise"] = to_array(p.noise, {p.frames, p.bins});
  d["gamma"] = to_array(p.gamma, {p.frames, p.bins, num_modes(p.reverb_order)});
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spherical-array PSD estimation and source separation";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);

  py::enum_<ArrayKind>(m, "ArrayKind").value("Open", ArrayKind::Open).value("Rigid", ArrayKind::Rigid);
  py::enum_<OrderRule>(m, "OrderRule").value("ExpHalf", OrderRule::ExpHalf).value("Ceil", OrderRule::Ceil);
  py::enum_<BeamformerKind>(m, "Beamformer")
      .value("MaxDirectivity", BeamformerKind::MaxDirectivity)
      .value("DelaySum", BeamformerKind::DelaySum);

  m.def("sph_bessel_j", &sph_bessel_j, py::arg("n"), py::arg("x"));
  m.def("sph_bessel_y", &sph_bessel_y, py::arg("n"), py::arg("x"));
  m.def("sph_hankel1", &sph_hankel1, py::arg("n"), py::arg("x"));
  m.def(
      "sph_harmonic", [](int n, int mm, double theta, double phi) { return sph_harmonic({n, mm}, theta, phi); },
      py::arg("n"), py::arg("m"), py::arg("theta"), py::arg("phi"));
  m.def("wigner3j", &wigner3j);
  m.def("gaunt_w", &gaunt_w, py::arg("v"), py::arg("u"), py::arg("n"), py::arg("m"), py::arg("n_prime"),
        py::arg("m_prime"));
  m.def("bn_value", &bn_value, py::arg("n"), py::arg("kr"), py::arg("kind"));

  py::class_<ArrayGeometry>(m, "ArrayGeometry")
      .def_static("icosahedral32", [](double radius, ArrayKind kind) { return ArrayGeometry::icosahedral32(radius, kind); },
                  py::arg("radius") = 0.042, py::arg("kind") = ArrayKind::Rigid)
      .def_static("load", &load_geometry, py::arg("path"))
      .def_readwrite("radius", &ArrayGeometry::radius)
      .def_readwrite("kind", &ArrayGeometry::kind)
      .def("__len__", &ArrayGeometry::size)
      .def_property_readonly("directions",
                             [](const ArrayGeometry& g) {
                               std::vector<double> v;
                               for (const auto& mic : g.mics) v.insert(v.end(), {mic.dir.theta, mic.dir.phi});
                               return to_array(v, {static_cast<py::ssize_t>(g.size()), 2});
                             })
      .def_property_readonly("weights",
                             [](const ArrayGeometry& g) {
                               std::vector<double> v;
                               for (const auto& mic : g.mics) v.push_back(mic.weight);
                               return to_array(v, {static_cast<py::ssize_t>(g.size())});
                             })
      .def("validate", &ArrayGeometry::validate, py::arg("weight_tolerance") = 1e-6)
      .def("orthonormality_error", [](const ArrayGeometry& g, int order) { return orthonormality_error(g, order); });

  py::class_<BesselFloorPolicy>(m, "BesselFloorPolicy")
      .def(py::init<>())
      .def_readwrite("n_min", &BesselFloorPolicy::n_min)
      .def_readwrite("b_floor", &BesselFloorPolicy::b_floor)
      .def_readwrite("enabled", &BesselFloorPolicy::enabled)
      .def_readwrite("rule", &BesselFloorPolicy::rule);
  m.def("truncation_order", &truncation_order, py::arg("k"), py::arg("r"), py::arg("policy"));
  m.def("floored_bn", &floored_bn, py::arg("n"), py::arg("k"), py::arg("geometry"), py::arg("policy"));

  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init<>())
      .def_static("from_json", [](const std::string& s) { return estimator_from_json(nlohmann::json::parse(s)); })
      .def("to_json", [](const EstimatorConfig& c) { return estimator_to_json(c).dump(); })
      .def_readwrite("reverb_order", &EstimatorConfig::reverb_order)
      .def_readwrite("beta", &EstimatorConfig::beta)
      .def_readwrite("noise_band_hz", &EstimatorConfig::noise_band_hz)
      .def_readwrite("rectify", &EstimatorConfig::rectify)
      .def_readwrite("include_noise_column", &EstimatorConfig::include_noise_column)
      .def_readwrite("include_reverb_columns", &EstimatorConfig::include_reverb_columns)
      .def_readwrite("max_order", &EstimatorConfig::max_order)
      .def_readwrite("speed_of_sound", &EstimatorConfig::speed_of_sound)
      .def_readwrite("floor", &EstimatorConfig::floor)
      .def_readwrite("model_floor_gain", &EstimatorConfig::model_floor_gain);

  py::class_<StftConfig>(m, "StftConfig")
      .def(py::init<>())
      .def_readwrite("window_length", &StftConfig::window_length)
      .def_readwrite("hop", &StftConfig::hop)
      .def_readwrite("fft_size", &StftConfig::fft_size)
      .def_readwrite("sample_rate", &StftConfig::sample_rate)
      .def_property_readonly("num_bins", &StftConfig::num_bins);

  m.def(
      "stft",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x, const StftConfig& cfg) {
        if (x.ndim() != 2) throw ArgumentError("signals must be (channels, samples)");
        std::vector<std::vector<double>> ch(static_cast<std::size_t>(x.shape(0)));
        for (py::ssize_t c = 0; c < x.shape(0); ++c) ch[c].assign(x.data(c, 0), x.data(c, 0) + x.shape(1));
        return spectra_to_array(stft_analyze(ch, cfg));
      },
      py::arg("signals"), py::arg("config") = StftConfig{}, "Returns (frames, bins, channels) spectra.");
  m.def(
      "istft",
      [](py::array_t<cplx, py::array::c_style | py::array::forcecast> s, std::size_t length, const StftConfig& cfg) {
        const auto out = stft_synthesize(spectra_from_array(s, cfg, length));
        std::vector<double> flat;
        for (const auto& c : out) flat.insert(flat.end(), c.begin(), c.end());
        return to_array(flat, {static_cast<py::ssize_t>(out.size()), static_cast<py::ssize_t>(length)});
      },
      py::arg("spectra"), py::arg("length"), py::arg("config") = StftConfig{});

  m.def(
      "modal_coefficients",
      [](py::array_t<cplx, py::array::c_style | py::array::forcecast> s, const ArrayGeometry& g,
         const EstimatorConfig& est, const StftConfig& cfg) {
        const auto spectra = spectra_from_array(s, cfg, 0);
        const FrequencyGrid grid{cfg.sample_rate, cfg.fft_size, est.speed_of_sound};
        const auto mf = modal_coefficients(spectra, g, grid, est.floor, est.max_order);
        return to_array(mf.data, {mf.frames, mf.bins, mf.modes()});
      },
      py::arg("spectra"), py::arg("geometry"), py::arg("estimator") = EstimatorConfig{},
      py::arg("config") = StftConfig{}, "Returns (frames, bins, (max_order + 1)^2) coefficients.");

  m.def(
      "translation_matrix",
      [](const EstimatorConfig& c, const std::vector<std::vector<double>>& sources, int order, double k,
         const ArrayGeometry& g) { return build_translation_matrix(c, to_sources(sources), order, k, g).matrix; },
      py::arg("estimator"), py::arg("sources"), py::arg("order"), py::arg("k"), py::arg("geometry"));
  m.def("condition_number", py::overload_cast<const Eigen::MatrixXcd&>(&condition_number));

  m.def(
      "simulate",
      [](const std::string& scene_json, const ArrayGeometry& g, int threads) {
        const auto cfg = scene_from_json(nlohmann::json::parse(scene_json));
        SceneRender r;
        {
          py::gil_scoped_release release;
          r = render_scene(cfg, g, threads);
        }
        const auto& t = r.truth;
        py::dict d;
        d["mixture"] = spectra_to_array(r.mixture);
        d["length"] = r.mixture.signal_length;
        d["source_psd"] = to_array(t.source_psd, {t.frames, t.bins, t.num_sources});
        d["reverb_psd"] = to_array(t.reverb_psd, {t.bins});
        d["noise_psd"] = to_array(t.noise_psd, {t.bins});
        d["gamma"] = to_array(t.gamma, {t.bins, num_modes(t.reverb_order)});
        std::vector<double> stems;
        for (const auto& s : r.stems) stems.insert(stems.end(), s.begin(), s.end());
        d["stems"] = to_array(stems, {t.num_sources, static_cast<py::ssize_t>(r.mixture.signal_length)});
        d["origin"] = to_array(r.origin_mixture, {static_cast<py::ssize_t>(r.origin_mixture.size())});
        return d;
      },
      py::arg("scene_json"), py::arg("geometry"), py::arg("threads") = 1);

  m.def(
      "estimate_psd",
      [](py::array_t<cplx, py::array::c_style | py::array::forcecast> s, const std::vector<std::vector<double>>& sources,
         const ArrayGeometry& g, const EstimatorConfig& est, const StftConfig& cfg, int threads) {
        const auto spectra = spectra_from_array(s, cfg, 0);
        const FrequencyGrid grid{cfg.sample_rate, cfg.fft_size, est.speed_of_sound};
        py::gil_scoped_release release;
        const auto mf = modal_coefficients(spectra, g, grid, est.floor, est.max_order);
        const auto psd = PsdEstimator(est, to_sources(sources), g, grid).run(mf, threads);
        py::gil_scoped_acquire acquire;
        return psd_to_dict(psd);
      },
      py::arg("spectra"), py::arg("sources"), py::arg("geometry"), py::arg("estimator") = EstimatorConfig{},
      py::arg("config") = StftConfig{}, py::arg("threads") = 1);

  m.def(
      "separate",
      [](py::array_t<cplx, py::array::c_style | py::array::forcecast> s, std::size_t length,
         const std::vector<std::vector<double>>& sources, const ArrayGeometry& g, const EstimatorConfig& est,
         BeamformerKind beam, bool bypass_wiener, const StftConfig& cfg, int threads) {
        const auto spectra = spectra_from_array(s, cfg, length);
        const FrequencyGrid grid{cfg.sample_rate, cfg.fft_size, est.speed_of_sound};
        const auto src = to_sources(sources);
        SeparationOutput out;
        {
          py::gil_scoped_release release;
          const auto mf = modal_coefficients(spectra, g, grid, est.floor, est.max_order);
          const auto psd = PsdEstimator(est, src, g, grid).run(mf, threads);
          out = separate_sources(mf, src, psd, g, grid, cfg, length, {beam, bypass_wiener, 0.0, threads});
        }
        std::vector<double> sig, gains;
        for (const auto& x : out.signals) sig.insert(sig.end(), x.begin(), x.end());
        for (const auto& x : out.gains) gains.insert(gains.end(), x.begin(), x.end());
        py::dict d;
        const auto l = static_cast<py::ssize_t>(src.size());
        d["signals"] = to_array(sig, {l, static_cast<py::ssize_t>(length)});
        d["gains"] = to_array(gains, {l, out.frames, out.bins});
        return d;
      },
      py::arg("spectra"), py::arg("length"), py::arg("sources"), py::arg("geometry"),
      py::arg("estimator") = EstimatorConfig{}, py::arg("beamformer") = BeamformerKind::MaxDirectivity,
      py::arg("bypass_wiener") = false, py::arg("config") = StftConfig{}, py::arg("threads") = 1);

  m.def(
      "psd_error_db",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> truth,
         py::array_t<double, py::array::c_style | py::array::forcecast> estimate, double silence_db) {
        if (truth.ndim() != 2 || estimate.ndim() != 2) throw ArgumentError("PSDs must be (frames, bins)");
        std::vector<double> t(truth.data(), truth.data() + truth.size());
        std::vector<double> e(estimate.data(), estimate.data() + estimate.size());
        return psd_error(t, e, static_cast<int>(truth.shape(0)), static_cast<int>(truth.shape(1)), silence_db);
      },
      py::arg("truth"), py::arg("estimate"), py::arg("silence_db") = -60.0);
  m.def(
      "ewma",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x, double beta) {
        if (x.ndim() != 2) throw ArgumentError("values must be (frames, bins)");
        std::vector<double> v(x.data(), x.data() + x.size());
        return to_array(ewma_frames(v, static_cast<int>(x.shape(0)), static_cast<int>(x.shape(1)), beta),
                        {x.shape(0), x.shape(1)});
      },
      py::arg("values"), py::arg("beta") = 0.8);
  m.def(
      "sir_gain_db",
      [](const std::vector<double>& estimate, const std::vector<std::vector<double>>& stems, int target,
         const std::vector<double>& mixture) {
        return sir_snr_improvement(estimate, stems, target, mixture).sir_gain_db;
      },
      py::arg("estimate"), py::arg("stems"), py::arg("target"), py::arg("mixture"));
}
