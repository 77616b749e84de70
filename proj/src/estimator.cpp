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

#include "sphpsd/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sphpsd {

namespace {

constexpr double kSixteenPiSq = 16.0 * kPi * kPi;

Eigen::MatrixXcd harmonics_matrix(int order, const std::vector<Direction>& dirs) {
  Eigen::MatrixXcd y(static_cast<Eigen::Index>(dirs.size()), num_modes(order));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto v = sph_harmonics_all(order, dirs[i].theta, dirs[i].phi);
    for (int a = 0; a < num_modes(order); ++a) y(static_cast<Eigen::Index>(i), a) = v[a];
  }
  return y;
}

}  // namespace

void validate_sources(const SourceSet& sources) {
  if (sources.empty()) throw ConfigError("at least one source is required");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    if (s.doa.theta < 0.0 || s.doa.theta > kPi || s.doa.phi < 0.0 || s.doa.phi >= 2.0 * kPi) {
      throw ConfigError("source " + std::to_string(i) + " DOA outside [0, pi] x [0, 2 pi)");
    }
    if (s.range_m && !(*s.range_m > 0.0)) throw ConfigError("source " + std::to_string(i) + " range must be positive");
    for (std::size_t j = 0; j < i; ++j) {
      if (angular_distance(s.doa, sources[j].doa) < 1e-9) {
        throw ConfigError("sources " + std::to_string(j) + " and " + std::to_string(i) + " share a DOA");
      }
    }
  }
}

void EstimatorConfig::validate() const {
  if (reverb_order < 0) throw ConfigError("reverb order V must be non-negative");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(svd_tolerance > 0.0 && svd_tolerance < 1.0)) throw ConfigError("svd_tolerance must lie in (0, 1)");
  if (max_order < 0) throw ConfigError("max_order must be non-negative");
  if (!(speed_of_sound > 0.0)) throw ConfigError("speed of sound must be positive");
  if (noise_band_hz < 0.0) throw ConfigError("noise band must be non-negative");
  floor.validate();
}

cplx upsilon_farfield(const ModeIndex& a, const ModeIndex& b, const Direction& doa) {
  validate(a);
  validate(b);
  return kSixteenPiSq * ipow(a.n - b.n) * std::conj(sph_harmonic(a, doa.theta, doa.phi)) *
         sph_harmonic(b, doa.theta, doa.phi);
}

cplx upsilon_nearfield(const ModeIndex& a, const ModeIndex& b, const Direction& doa, double range, double k) {
  validate(a);
  validate(b);
  if (!(range > 0.0)) throw DomainError("near-field source range must be positive");
  if (!(k > 0.0)) throw DomainError("near-field term needs k > 0");
  const cplx ha = std::conj(sph_hankel1(a.n, k * range));
  const cplx hb = sph_hankel1(b.n, k * range);
  return k * k * ha * hb * std::conj(sph_harmonic(a, doa.theta, doa.phi)) * sph_harmonic(b, doa.theta, doa.phi);
}

cplx psi_coeff(const ModeIndex& a, const ModeIndex& b, const ModeIndex& vu) {
  return kSixteenPiSq * ipow(a.n - b.n) * gaunt_w(vu.n, vu.m, a.n, a.m, b.n, b.m);
}

cplx omega_closed(const ModeIndex& a, const ModeIndex& b, double k, const ArrayGeometry& geometry,
                  const BesselFloorPolicy& policy) {
  const double w = gaunt_w(a.n, -a.m, b.n, -b.m, 0, 0);
  if (w == 0.0) return {};
  const double kr = k * geometry.radius;
  const double bn = std::abs(floored_bn(a.n, k, geometry, policy));
  if (bn == 0.0) return {};
  const double pref = std::pow(kFourPi, 1.5);
  return pref * ipow(a.n - b.n + 2 * a.m + 2 * b.m) * sph_bessel_j(a.n, kr) * sph_bessel_j(b.n, kr) * w / (bn * bn);
}

Eigen::MatrixXcd omega_quadrature_matrix(int order, double k, const ArrayGeometry& geometry,
                                         const BesselFloorPolicy& policy, const std::vector<SpherePoint>& points) {
  std::vector<Direction> dirs;
  for (const auto& p : points) dirs.push_back(p.dir);
  const Eigen::MatrixXcd y = harmonics_matrix(order, dirs);
  const auto count = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd j(count, count);
  std::vector<std::array<double, 3>> pos;
  for (const auto& p : points) pos.push_back(p.dir.unit_vector());
  for (Eigen::Index q = 0; q < count; ++q) {
    for (Eigen::Index s = 0; s < count; ++s) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) d2 += (pos[q][c] - pos[s][c]) * (pos[q][c] - pos[s][c]);
      j(q, s) = sph_bessel_j(0, k * geometry.radius * std::sqrt(d2)) * points[q].weight * points[s].weight;
    }
  }
  Eigen::MatrixXcd omega = y.adjoint() * j * y;
  for (int a = 0; a < num_modes(order); ++a) {
    const double bn = std::abs(floored_bn(mode_from_acn(a).n, k, geometry, policy));
    if (bn == 0.0) {
      omega.row(a).setZero();
    } else {
      omega.row(a) /= bn * bn;
    }
  }
  return omega;
}

cplx omega_quadrature(const ModeIndex& a, const ModeIndex& b, double k, const ArrayGeometry& geometry,
                      const BesselFloorPolicy& policy, const std::vector<SpherePoint>& points) {
  const int order = std::max(a.n, b.n);
  return omega_quadrature_matrix(order, k, geometry, policy, points)(acn_index(a), acn_index(b));
}

TranslationMatrix build_translation_matrix(const EstimatorConfig& config, const SourceSet& sources, int order,
                                           double k, const ArrayGeometry& geometry) {
  if (order < 0) throw ArgumentError("order must be non-negative");
  const int modes = num_modes(order);
  const int v_order = config.reverb_order;
  const int n_rev = num_modes(v_order);
  const int n_src = static_cast<int>(sources.size());

  TranslationMatrix t;
  t.order = order;
  t.num_sources = n_src;
  t.reverb_order = v_order;
  t.matrix = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(modes) * modes, n_src + n_rev + 1);

  std::vector<Eigen::VectorXcd> radial(static_cast<std::size_t>(n_src));
  std::vector<Direction> dirs;
  for (const auto& s : sources) dirs.push_back(s.doa);
  const Eigen::MatrixXcd y = harmonics_matrix(order, dirs);
  for (int l = 0; l < n_src; ++l) {
    // Per-mode radial factor c_n such that Upsilon = c_a conj(c_b) Y*_a Y_b.
    Eigen::VectorXcd c(modes);
    const auto& range = sources[l].range_m;
    for (int a = 0; a < modes; ++a) {
      const int n = mode_from_acn(a).n;
      if (range && k > 0.0) {
        c(a) = kFourPi * *range * k * cplx(0.0, -1.0) * std::conj(sph_hankel1(n, k * *range));
      } else {
        c(a) = kFourPi * ipow(n);
      }
    }
    radial[l] = c;
  }
  Eigen::VectorXd gain = Eigen::VectorXd::Ones(modes);
  if (config.model_floor_gain) {
    for (int a = 0; a < modes; ++a) {
      const int n = mode_from_acn(a).n;
      const double floored = std::abs(floored_bn(n, k, geometry, config.floor));
      gain(a) = floored == 0.0 ? 0.0 : std::abs(bn_value(n, k * geometry.radius, geometry.kind)) / floored;
    }
  }
  for (int a = 0; a < modes; ++a) {
    const ModeIndex ma = mode_from_acn(a);
    for (int b = 0; b < modes; ++b) {
      const ModeIndex mb = mode_from_acn(b);
      const Eigen::Index row = static_cast<Eigen::Index>(a) * modes + b;
      for (int l = 0; l < n_src; ++l) {
        t.matrix(row, l) = gain(a) * gain(b) * radial[l](a) * std::conj(radial[l](b)) * std::conj(y(l, a)) * y(l, b);
      }
      const int u = ma.m - mb.m;
      for (int v = std::abs(u); v <= v_order; ++v) {
        t.matrix(row, t.reverb_column(v, u)) = gain(a) * gain(b) * psi_coeff(ma, mb, {v, u});
      }
      t.matrix(row, t.noise_column()) = omega_closed(ma, mb, k, geometry, config.floor);
    }
  }
  return t;
}

double condition_number(const Eigen::MatrixXcd& matrix) {
  if (matrix.size() == 0 || matrix.cwiseAbs().maxCoeff() == 0.0) throw DomainError("condition number of a zero matrix");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(matrix);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (matrix.cols() > matrix.rows() || smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

CorrelationState::CorrelationState(const std::vector<int>& orders, double beta) : beta_(beta), orders_(orders) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in [0, 1]");
  counts_.assign(orders.size(), 0);
  for (int n : orders) lambda_.push_back(Eigen::MatrixXcd::Zero(num_modes(n), num_modes(n)));
}

void CorrelationState::update_bin(int bin, const cplx* alpha) {
  auto& lam = lambda_[bin];
  const Eigen::Index m = lam.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    const cplx aj = std::conj(alpha[j]);
    for (Eigen::Index i = 0; i < m; ++i) lam(i, j) = beta_ * lam(i, j) + (1.0 - beta_) * (alpha[i] * aj);
  }
  ++counts_[bin];
}

Eigen::VectorXcd CorrelationState::flattened(int bin) const {
  const auto& lam = lambda_[bin];
  const Eigen::Index m = lam.rows();
  Eigen::VectorXcd out(m * m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) out(a * m + b) = lam(a, b);
  return out;
}

double CorrelationState::hermitian_error(int bin) const {
  const auto& lam = lambda_[bin];
  return (lam - lam.adjoint()).cwiseAbs().maxCoeff();
}

double CorrelationState::min_diagonal(int bin) const {
  const auto& lam = lambda_[bin];
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lam.rows(); ++i) {
    // A complex diagonal entry counts as a violation through its imaginary part.
    lo = std::min(lo, lam(i, i).real() - std::abs(lam(i, i).imag()));
  }
  return lo;
}

void update_correlation(CorrelationState& state, const ModalFrames& frames, int frame) {
  if (frames.bins != state.bins()) throw ArgumentError("bin count differs between frame and state");
  if (frame < 0 || frame >= frames.frames) throw ArgumentError("frame index out of range");
  for (int b = 0; b < frames.bins; ++b) {
    if (frames.order[b] != state.order(b)) {
      throw ArgumentError("modal order " + std::to_string(frames.order[b]) + " at bin " + std::to_string(b) +
                          " does not match correlation order " + std::to_string(state.order(b)));
    }
  }
  for (int b = 0; b < frames.bins; ++b) state.update_bin(b, &frames.at(frame, b, 0));
}

double reverb_total_psd(const PsdVector& theta) {
  if (theta.gamma.empty()) return 0.0;
  return std::sqrt(kFourPi) * theta.gamma.front().real();
}

double PsdVector::reverb_total() const { return reverb_total_psd(*this); }

PsdSolver::PsdSolver(const TranslationMatrix& t, const EstimatorConfig& config, bool noise_active)
    : num_sources_(t.num_sources),
      reverb_order_(t.reverb_order),
      reverb_active_(config.include_reverb_columns),
      noise_active_(noise_active),
      rectify_(config.rectify) {
  std::vector<Eigen::VectorXcd> cols;
  for (int l = 0; l < t.num_sources; ++l) cols.push_back(t.matrix.col(l));
  if (reverb_active_) {
    for (int v = 0; v <= t.reverb_order; ++v) {
      cols.push_back(t.matrix.col(t.reverb_column(v, 0)));
      for (int u = 1; u <= v; ++u) {
        const Eigen::VectorXcd pos = t.matrix.col(t.reverb_column(v, u));
        const Eigen::VectorXcd neg = minus_one_pow(u) * t.matrix.col(t.reverb_column(v, -u));
        cols.push_back(pos + neg);
        cols.push_back(cplx(0.0, 1.0) * (pos - neg));
      }
    }
  }
  if (noise_active_) cols.push_back(t.matrix.col(t.noise_column()));

  const Eigen::Index rows = t.matrix.rows();
  Eigen::MatrixXd a(2 * rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    a.col(static_cast<Eigen::Index>(c)).head(rows) = cols[c].real();
    a.col(static_cast<Eigen::Index>(c)).tail(rows) = cols[c].imag();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() ? config.svd_tolerance * s(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      inv(i) = 1.0 / s(i);
      ++rank_;
    }
  }
  condition_ = (s.size() && s(s.size() - 1) > 0.0 && a.rows() >= a.cols()) ? s(0) / s(s.size() - 1)
                                                                         : std::numeric_limits<double>::infinity();
  pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXd PsdSolver::raw_solve(const Eigen::VectorXcd& lambda_flat) const {
  const Eigen::Index rows = lambda_flat.size();
  if (2 * rows != pinv_.cols()) throw ArgumentError("correlation vector does not match the translation matrix");
  return pinv_.leftCols(rows) * lambda_flat.real() + pinv_.rightCols(rows) * lambda_flat.imag();
}

PsdVector PsdSolver::solve(const Eigen::VectorXcd& lambda_flat) const {
  const Eigen::VectorXd x = raw_solve(lambda_flat);
  PsdVector out;
  out.sources.assign(x.data(), x.data() + num_sources_);
  out.gamma.assign(static_cast<std::size_t>(num_modes(reverb_order_)), cplx{});
  Eigen::Index i = num_sources_;
  if (reverb_active_) {
    for (int v = 0; v <= reverb_order_; ++v) {
      out.gamma[acn_index({v, 0})] = x(i++);
      for (int u = 1; u <= v; ++u) {
        const cplx g(x(i), x(i + 1));
        i += 2;
        out.gamma[acn_index({v, u})] = g;
        out.gamma[acn_index({v, -u})] = minus_one_pow(u) * std::conj(g);
      }
    }
  }
  if (noise_active_) out.noise = x(i++);
  if (rectify_) {
    for (auto& p : out.sources) p = std::max(p, 0.0);
    out.noise = std::max(out.noise, 0.0);
    out.gamma[0] = std::max(out.gamma[0].real(), 0.0);
  }
  return out;
}

PsdVector solve_psd(const Eigen::VectorXcd& lambda_flat, const TranslationMatrix& t, const EstimatorConfig& config,
                    double frequency_hz) {
  const bool noise = config.include_noise_column && frequency_hz <= config.noise_band_hz;
  return PsdSolver(t, config, noise).solve(lambda_flat);
}

ReverbOrderBounds max_reverb_order(int order, int num_sources) {
  const double m = num_modes(order);
  if (!(m > num_sources + 1)) {
    throw DomainError("(N+1)^2 = " + std::to_string(static_cast<int>(m)) + " must exceed L + 1 = " +
                      std::to_string(num_sources + 1));
  }
  ReverbOrderBounds b;
  b.modes = static_cast<int>(std::floor(std::sqrt(m - num_sources - 1.0) - 1.0));
  b.shape = static_cast<int>(std::floor(std::sqrt(m * m - num_sources - 1.0) - 1.0));
  return b;
}

PsdEstimates::PsdEstimates(int n_frames, int n_bins, int n_sources, int v)
    : frames(n_frames), bins(n_bins), num_sources(n_sources), reverb_order(v) {
  const auto cells = static_cast<std::size_t>(frames) * bins;
  source.assign(cells * num_sources, 0.0);
  gamma.assign(cells * num_modes(v), cplx{});
  noise.assign(cells, 0.0);
  reverb.assign(cells, 0.0);
}

PsdVector PsdEstimates::at(int frame, int bin) const {
  const auto c = cell(frame, bin);
  PsdVector p;
  p.sources.assign(source.begin() + static_cast<long>(c * num_sources),
                   source.begin() + static_cast<long>((c + 1) * num_sources));
  const auto g = static_cast<std::size_t>(num_modes(reverb_order));
  p.gamma.assign(gamma.begin() + static_cast<long>(c * g), gamma.begin() + static_cast<long>((c + 1) * g));
  p.noise = noise[c];
  return p;
}

void PsdEstimates::set(int frame, int bin, const PsdVector& theta) {
  const auto c = cell(frame, bin);
  std::copy(theta.sources.begin(), theta.sources.end(), source.begin() + static_cast<long>(c * num_sources));
  const auto g = static_cast<std::size_t>(num_modes(reverb_order));
  std::copy(theta.gamma.begin(), theta.gamma.end(), gamma.begin() + static_cast<long>(c * g));
  noise[c] = theta.noise;
  reverb[c] = theta.reverb_total();
}

PsdEstimator::PsdEstimator(const EstimatorConfig& config, const SourceSet& sources, const ArrayGeometry& geometry,
                           const FrequencyGrid& grid)
    : config_(config), grid_(grid), num_sources_(static_cast<int>(sources.size())) {
  config.validate();
  validate_sources(sources);
  for (const auto& s : sources) {
    if (s.range_m && *s.range_m <= geometry.radius) throw ConfigError("near-field source inside the array radius");
  }
  for (int b = 0; b < grid.num_bins(); ++b) {
    const double k = grid.wavenumber(b);
    const int order = active_order(k, geometry.radius, config.floor, config.max_order);
    orders_.push_back(order);
    matrices_.push_back(build_translation_matrix(config, sources, order, k, geometry));
    const bool noise = config.include_noise_column && grid.frequency(b) <= config.noise_band_hz;
    solvers_.emplace_back(matrices_.back(), config, noise);
    BinDiagnostics d;
    d.bin = b;
    d.frequency_hz = grid.frequency(b);
    d.order = order;
    d.rows = matrices_.back().rows();
    d.cols = matrices_.back().cols();
    d.rank = solvers_.back().rank();
    d.condition = solvers_.back().condition();
    d.noise_column = noise;
    d.underdetermined = matrices_.back().underdetermined() || d.rank < solvers_.back().unknowns();
    diagnostics_.push_back(d);
  }
}

PsdEstimates PsdEstimator::run(const ModalFrames& frames, int threads, InvariantReport* report) const {
  if (frames.bins != static_cast<int>(orders_.size())) throw ArgumentError("modal frames do not match the frequency grid");
  for (int b = 0; b < frames.bins; ++b) {
    if (frames.order[b] != orders_[b]) throw ArgumentError("modal order mismatch at bin " + std::to_string(b));
  }
  PsdEstimates out(frames.frames, frames.bins, num_sources_, config_.reverb_order);
  CorrelationState state(orders_, config_.beta);
  std::vector<InvariantReport> per_bin(static_cast<std::size_t>(frames.bins));
  parallel_for(frames.bins, threads, [&](int b) {
    auto& rep = per_bin[b];
    rep.min_diagonal = std::numeric_limits<double>::infinity();
    rep.min_rectified = std::numeric_limits<double>::infinity();
    for (int t = 0; t < frames.frames; ++t) {
      state.update_bin(b, &frames.at(t, b, 0));
      const PsdVector theta = solvers_[b].solve(state.flattened(b));
      out.set(t, b, theta);
      if (report) {
        const auto& lam = state.lambda(b);
        const double scale = std::max(lam.diagonal().real().maxCoeff(), std::numeric_limits<double>::min());
        rep.max_hermitian_error = std::max(rep.max_hermitian_error, state.hermitian_error(b) / scale);
        rep.min_diagonal = std::min(rep.min_diagonal, state.min_diagonal(b));
        double lo = std::min(theta.noise, theta.gamma[0].real());
        for (double p : theta.sources) lo = std::min(lo, p);
        rep.min_rectified = std::min(rep.min_rectified, lo);
        ++rep.frames_checked;
      }
    }
  });
  if (report) {
    *report = InvariantReport{};
    report->min_diagonal = std::numeric_limits<double>::infinity();
    report->min_rectified = std::numeric_limits<double>::infinity();
    for (const auto& r : per_bin) {
      report->frames_checked += r.frames_checked;
      report->max_hermitian_error = std::max(report->max_hermitian_error, r.max_hermitian_error);
      report->min_diagonal = std::min(report->min_diagonal, r.min_diagonal);
      report->min_rectified = std::min(report->min_rectified, r.min_rectified);
    }
  }
  return out;
}

}  // namespace sphpsd
