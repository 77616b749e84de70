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
#include <random>

#include <catch_amalgamated.hpp>

#include "sphpsd/estimator.hpp"
#include "sphpsd/metrics.hpp"

using namespace sphpsd;
using Catch::Approx;

namespace {

std::vector<double> random_psd(int frames, int bins, unsigned seed) {
  std::mt19937 rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(static_cast<std::size_t>(frames) * bins);
  for (auto& x : v) x = e(rng);
  return v;
}

}  // namespace

TEST_CASE("psd_error examples") {
  const int frames = 20, bins = 9;
  const auto phi = random_psd(frames, bins, 3);
  CHECK(psd_error(phi, phi, frames, bins) == -100.0);
  auto twice = phi;
  for (auto& v : twice) v *= 2.0;
  CHECK(psd_error(phi, twice, frames, bins) == Approx(0.0).margin(1e-12));
  CHECK(psd_error(phi, std::vector<double>(phi.size(), 0.0), frames, bins) == Approx(0.0).margin(1e-12));

  auto off = phi;
  for (auto& v : off) v *= 1.1;
  CHECK(psd_error(phi, off, frames, bins) == Approx(-10.0).margin(1e-9));

  CHECK_THROWS_AS(psd_error(phi, std::vector<double>(3), frames, bins), ArgumentError);
  CHECK_THROWS_AS(psd_error(std::vector<double>(phi.size(), 0.0), phi, frames, bins), DomainError);
}

TEST_CASE("psd_error properties") {
  const int frames = 30, bins = 5;
  const auto phi = random_psd(frames, bins, 4);
  auto est = random_psd(frames, bins, 5);
  const double e = psd_error(phi, est, frames, bins);

  auto a = phi, b = est;
  for (auto& v : a) v *= 7.5;
  for (auto& v : b) v *= 7.5;
  CHECK(psd_error(a, b, frames, bins) == Approx(e).epsilon(1e-12));

  std::vector<double> mirror(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) mirror[i] = 2.0 * phi[i] - est[i];
  CHECK(psd_error(phi, mirror, frames, bins) == Approx(e).epsilon(1e-12));
}

TEST_CASE("psd_error skips silent frames and reports per bin") {
  const int frames = 4, bins = 2;
  // Frame 3 is 80 dB below the peak and is ignored.
  std::vector<double> truth = {1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1e-8, 1e-8};
  std::vector<double> est = {1.5, 2.0, 1.5, 2.0, 1.5, 2.0, 5.0, 5.0};
  const auto r = psd_error_report(truth, est, frames, bins);
  CHECK(r.bins_used == 2);
  CHECK(r.per_bin[0] == Approx(0.5));
  CHECK(r.per_bin[1] == Approx(0.0).margin(1e-15));
  CHECK(r.db == Approx(10.0 * std::log10(0.25)));
}

TEST_CASE("ewma_frames and component") {
  const std::vector<double> v = {1.0, 10.0, 1.0, 10.0, 1.0, 10.0};
  const auto s = ewma_frames(v, 3, 2, 0.8);
  CHECK(s[0] == Approx(0.2));
  CHECK(s[1] == Approx(2.0));
  CHECK(s[2] == Approx(0.36));
  CHECK(s[4] == Approx(1.0 - 0.8 * 0.8 * 0.8));
  const auto same = ewma_frames(v, 3, 2, 0.0);
  CHECK(same == v);

  const std::vector<double> packed = {0, 1, 2, 10, 11, 12};
  const auto c = component(packed, 1, 2, 3, 1);
  CHECK(c == std::vector<double>{1, 11});
  CHECK_THROWS_AS(component(packed, 1, 2, 3, 3), ArgumentError);
}

TEST_CASE("condition_number") {
  CHECK(condition_number(Eigen::MatrixXcd::Identity(5, 3)) == Approx(1.0));
  Eigen::MatrixXcd m(3, 2);
  m << 1, 2, cplx(0, 1), 4, 5, cplx(6, -1);
  const double c = condition_number(m);
  CHECK(condition_number(cplx(-3.0, 2.0) * m) == Approx(c).epsilon(1e-12));
  CHECK_THROWS_AS(condition_number(Eigen::MatrixXcd::Zero(4, 4)), DomainError);
}

TEST_CASE("separation scores") {
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> stems(3, std::vector<double>(2000));
  for (auto& s : stems) {
    for (auto& v : s) v = g(rng);
  }
  std::vector<double> mix(2000);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = stems[0][i] + stems[1][i] + stems[2][i];

  const auto perfect = separation_score(stems[1], stems, 1);
  CHECK(perfect.sir_db == 100.0);
  CHECK(perfect.snr_db == 100.0);

  const auto same = sir_snr_improvement(mix, stems, 0, mix);
  CHECK(same.sir_gain_db == Approx(0.0).margin(1e-12));
  CHECK(same.snr_gain_db == Approx(0.0).margin(1e-12));
  CHECK(same.mixture.sir_db == Approx(10.0 * std::log10(0.5)).margin(0.3));

  std::vector<double> partial(2000);
  for (std::size_t i = 0; i < partial.size(); ++i) partial[i] = stems[0][i] + 0.1 * stems[1][i];
  const auto imp = sir_snr_improvement(partial, stems, 0, mix);
  CHECK(imp.output.sir_db == Approx(20.0).margin(0.5));
  CHECK(imp.sir_gain_db > 20.0);

  stems[2].assign(2000, 0.0);
  CHECK_THROWS_AS(separation_score(mix, stems, 2), DomainError);
  CHECK_THROWS_AS(separation_score(std::vector<double>(5), stems, 0), ArgumentError);
}
