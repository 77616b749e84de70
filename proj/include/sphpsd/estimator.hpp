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

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sphpsd/modal.hpp"
#include "sphpsd/parallel.hpp"

namespace sphpsd {

struct Source {
  Direction doa;
  std::optional<double> range_m;  // unset for a far-field source
};

using SourceSet = std::vector<Source>;

void validate_sources(const SourceSet& sources);

struct EstimatorConfig {
  int reverb_order = 0;  // V
  double beta = 0.8;
  double noise_band_hz = 1000.0;
  bool rectify = true;
  double svd_tolerance = 1e-8;
  bool include_noise_column = true;
  bool include_reverb_columns = true;
  int max_order = 4;
  double speed_of_sound = 343.0;
  BesselFloorPolicy floor;
  // Scale source and reverb rows by |b_n| / |floored b_n| so that floored
  // modes are modelled with the attenuation they actually carry.
  bool model_floor_gain = true;

  void validate() const;
};

// Column entries of the translation matrix. `a` indexes alpha_nm and `b`
// alpha*_n'm'.
cplx upsilon_farfield(const ModeIndex& a, const ModeIndex& b, const Direction& doa);
/// Point source at range r_l, normalized to unit source strength.
cplx upsilon_nearfield(const ModeIndex& a, const ModeIndex& b, const Direction& doa, double range, double k);
cplx psi_coeff(const ModeIndex& a, const ModeIndex& b, const ModeIndex& vu);
cplx omega_closed(const ModeIndex& a, const ModeIndex& b, double k, const ArrayGeometry& geometry,
                  const BesselFloorPolicy& policy);
/// Direct double sum over `points` placed on a sphere of the array radius.
cplx omega_quadrature(const ModeIndex& a, const ModeIndex& b, double k, const ArrayGeometry& geometry,
                      const BesselFloorPolicy& policy, const std::vector<SpherePoint>& points);
/// All (N+1)^2 x (N+1)^2 entries of omega_quadrature at once.
Eigen::MatrixXcd omega_quadrature_matrix(int order, double k, const ArrayGeometry& geometry,
                                         const BesselFloorPolicy& policy, const std::vector<SpherePoint>& points);

/// Rows: (nm, n'm') pairs, row index acn(nm) * (N+1)^2 + acn(n'm').
/// Columns: L sources, (V+1)^2 reverberation coefficients in ACN order, noise.
struct TranslationMatrix {
  int order = 0;
  int num_sources = 0;
  int reverb_order = 0;
  Eigen::MatrixXcd matrix;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
  int reverb_column(int v, int u) const { return num_sources + acn_index({v, u}); }
  int noise_column() const { return cols() - 1; }
  bool underdetermined() const { return rows() < cols(); }
};

/// Near-field sources use upsilon_nearfield scaled by (4 pi r_l)^2, so every
/// source unknown is the PSD it produces at the array centre.
TranslationMatrix build_translation_matrix(const EstimatorConfig& config, const SourceSet& sources, int order,
                                           double k, const ArrayGeometry& geometry);

double condition_number(const Eigen::MatrixXcd& matrix);
inline double condition_number(const TranslationMatrix& t) { return condition_number(t.matrix); }

/// Per-bin EWMA of alpha alpha^H.
class CorrelationState {
 public:
  CorrelationState(const std::vector<int>& orders, double beta);

  int bins() const { return static_cast<int>(lambda_.size()); }
  int order(int bin) const { return orders_[bin]; }
  double beta() const { return beta_; }
  long frames_seen(int bin) const { return counts_[bin]; }

  /// `alpha` points at num_modes(order(bin)) coefficients.
  void update_bin(int bin, const cplx* alpha);
  const Eigen::MatrixXcd& lambda(int bin) const { return lambda_[bin]; }
  /// Row-major flattening matching the translation-matrix rows.
  Eigen::VectorXcd flattened(int bin) const;

  /// Largest Hermitian asymmetry and most negative diagonal entry.
  double hermitian_error(int bin) const;
  double min_diagonal(int bin) const;

 private:
  double beta_;
  std::vector<int> orders_;
  std::vector<long> counts_;
  std::vector<Eigen::MatrixXcd> lambda_;
};

/// Updates every bin with frame `frame` of `frames`. Throws ArgumentError when
/// the per-bin orders disagree with the state.
void update_correlation(CorrelationState& state, const ModalFrames& frames, int frame);

struct PsdVector {
  std::vector<double> sources;
  std::vector<cplx> gamma;  // (V+1)^2 entries, ACN order
  double noise = 0.0;

  double reverb_total() const;
};

/// Total reverberant PSD at the array centre, sqrt(4 pi) * Gamma_00.
double reverb_total_psd(const PsdVector& theta);

/// Real least-squares solve of Lambda = T Theta for one bin. Gamma_v,-u is
/// tied to conj(Gamma_vu) so the unknowns are real.
class PsdSolver {
 public:
  PsdSolver(const TranslationMatrix& t, const EstimatorConfig& config, bool noise_active);

  PsdVector solve(const Eigen::VectorXcd& lambda_flat) const;
  /// Unrectified real unknowns.
  Eigen::VectorXd raw_solve(const Eigen::VectorXcd& lambda_flat) const;

  int rank() const { return rank_; }
  int unknowns() const { return static_cast<int>(pinv_.rows()); }
  double condition() const { return condition_; }
  bool noise_active() const { return noise_active_; }

 private:
  int num_sources_;
  int reverb_order_;
  bool reverb_active_;
  bool noise_active_;
  bool rectify_;
  int rank_ = 0;
  double condition_ = 0.0;
  Eigen::MatrixXd pinv_;
};

/// One-shot solve; the noise column is used only when the bin lies inside the
/// noise band.
PsdVector solve_psd(const Eigen::VectorXcd& lambda_flat, const TranslationMatrix& t, const EstimatorConfig& config,
                    double frequency_hz);

struct ReverbOrderBounds {
  int modes = 0;  // floor(sqrt((N+1)^2 - L - 1) - 1)
  int shape = 0;  // floor(sqrt((N+1)^4 - L - 1) - 1)
};
ReverbOrderBounds max_reverb_order(int order, int num_sources);

struct PsdEstimates {
  int frames = 0;
  int bins = 0;
  int num_sources = 0;
  int reverb_order = 0;
  std::vector<double> source;  // [frame][bin][source]
  std::vector<cplx> gamma;     // [frame][bin][(V+1)^2]
  std::vector<double> noise;   // [frame][bin]
  std::vector<double> reverb;  // [frame][bin]

  PsdEstimates() = default;
  PsdEstimates(int n_frames, int n_bins, int n_sources, int v);

  std::size_t cell(int frame, int bin) const { return static_cast<std::size_t>(frame) * bins + bin; }
  double& source_at(int frame, int bin, int l) { return source[cell(frame, bin) * num_sources + l]; }
  double source_at(int frame, int bin, int l) const { return source[cell(frame, bin) * num_sources + l]; }
  PsdVector at(int frame, int bin) const;
  void set(int frame, int bin, const PsdVector& theta);
};

struct BinDiagnostics {
  int bin = 0;
  double frequency_hz = 0.0;
  int order = 0;
  int rows = 0;
  int cols = 0;
  int rank = 0;
  double condition = 0.0;
  bool noise_column = false;
  bool underdetermined = false;
};

struct InvariantReport {
  long frames_checked = 0;
  double max_hermitian_error = 0.0;  // relative to the largest diagonal entry
  double min_diagonal = 0.0;
  double min_rectified = 0.0;
};

/// Streams modal frames through the EWMA and solves every bin per frame.
class PsdEstimator {
 public:
  PsdEstimator(const EstimatorConfig& config, const SourceSet& sources, const ArrayGeometry& geometry,
               const FrequencyGrid& grid);

  const std::vector<BinDiagnostics>& diagnostics() const { return diagnostics_; }
  const TranslationMatrix& translation(int bin) const { return matrices_[bin]; }
  const std::vector<int>& orders() const { return orders_; }

  PsdEstimates run(const ModalFrames& frames, int threads = 1, InvariantReport* report = nullptr) const;

 private:
  EstimatorConfig config_;
  FrequencyGrid grid_;
  int num_sources_;
  std::vector<int> orders_;
  std::vector<TranslationMatrix> matrices_;
  std::vector<PsdSolver> solvers_;
  std::vector<BinDiagnostics> diagnostics_;
};

}  // namespace sphpsd
