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

#include "sphpsd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace sphpsd {

namespace {

constexpr double kCapDb = 100.0;

double ratio_db(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kCapDb : -kCapDb;
  if (num <= 0.0) return -kCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kCapDb, kCapDb);
}

}  // namespace

PsdErrorReport psd_error_report(const std::vector<double>& truth, const std::vector<double>& estimate, int frames,
                                int bins, double silence_db) {
  const auto cells = static_cast<std::size_t>(frames) * bins;
  if (truth.size() != cells || estimate.size() != cells) throw ArgumentError("PSD arrays do not match frames x bins");
  double peak = 0.0;
  for (double v : truth) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) throw DomainError("true PSD is identically zero");
  const double gate = peak * std::pow(10.0, silence_db / 10.0);

  PsdErrorReport r;
  r.per_bin.assign(static_cast<std::size_t>(bins), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (int b = 0; b < bins; ++b) {
    double num = 0.0, den = 0.0;
    int used = 0;
    for (int t = 0; t < frames; ++t) {
      const std::size_t i = static_cast<std::size_t>(t) * bins + b;
      if (std::abs(truth[i]) <= gate) continue;
      num += std::abs(truth[i] - estimate[i]);
      den += std::abs(truth[i]);
      ++used;
    }
    if (used == 0) continue;
    r.per_bin[b] = num / den;
    sum += num / den;
    ++r.bins_used;
  }
  const double mean = sum / r.bins_used;
  r.db = mean > 0.0 ? std::max(10.0 * std::log10(mean), -kCapDb) : -kCapDb;
  return r;
}

double psd_error(const std::vector<double>& truth, const std::vector<double>& estimate, int frames, int bins,
                 double silence_db) {
  return psd_error_report(truth, estimate, frames, bins, silence_db).db;
}

std::vector<double> ewma_frames(const std::vector<double>& values, int frames, int bins, double beta) {
  if (values.size() != static_cast<std::size_t>(frames) * bins) throw ArgumentError("array does not match frames x bins");
  std::vector<double> out(values.size());
  std::vector<double> state(static_cast<std::size_t>(bins), 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int b = 0; b < bins; ++b) {
      const std::size_t i = static_cast<std::size_t>(t) * bins + b;
      state[b] = beta * state[b] + (1.0 - beta) * values[i];
      out[i] = state[b];
    }
  }
  return out;
}

std::vector<double> component(const std::vector<double>& values, int frames, int bins, int count, int index) {
  if (values.size() != static_cast<std::size_t>(frames) * bins * count) throw ArgumentError("array shape mismatch");
  if (index < 0 || index >= count) throw ArgumentError("component index out of range");
  std::vector<double> out(static_cast<std::size_t>(frames) * bins);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = values[c * count + index];
  return out;
}

SeparationScore separation_score(const std::vector<double>& estimate, const std::vector<std::vector<double>>& stems,
                                 int target) {
  if (target < 0 || target >= static_cast<int>(stems.size())) throw ArgumentError("target index out of range");
  const auto n = static_cast<Eigen::Index>(estimate.size());
  const auto count = static_cast<Eigen::Index>(stems.size());
  Eigen::MatrixXd s(n, count);
  for (Eigen::Index l = 0; l < count; ++l) {
    if (static_cast<Eigen::Index>(stems[l].size()) != n) throw ArgumentError("signals differ in length");
    s.col(l) = Eigen::Map<const Eigen::VectorXd>(stems[l].data(), n);
  }
  if (s.col(target).squaredNorm() == 0.0) throw DomainError("ground-truth stem is silent");
  const Eigen::Map<const Eigen::VectorXd> y(estimate.data(), n);
  const Eigen::VectorXd coef = s.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd own = s.col(target) * coef(target);
  const Eigen::VectorXd others = s * coef - own;
  SeparationScore r;
  r.sir_db = ratio_db(own.squaredNorm(), others.squaredNorm());
  r.snr_db = ratio_db(s.col(target).squaredNorm(), (y - s.col(target)).squaredNorm());
  return r;
}

SeparationImprovement sir_snr_improvement(const std::vector<double>& estimate,
                                          const std::vector<std::vector<double>>& stems, int target,
                                          const std::vector<double>& mixture) {
  SeparationImprovement r;
  r.output = separation_score(estimate, stems, target);
  r.mixture = separation_score(mixture, stems, target);
  r.sir_gain_db = r.output.sir_db - r.mixture.sir_db;
  r.snr_gain_db = r.output.snr_db - r.mixture.snr_db;
  return r;
}

}  // namespace sphpsd
