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

#include "sphpsd/geometry.hpp"

using namespace sphpsd;
using Catch::Approx;

TEST_CASE("icosahedral 32-point layout") {
  const auto geo = ArrayGeometry::icosahedral32();
  REQUIRE(geo.size() == 32);
  CHECK(geo.radius == 0.042);
  CHECK(geo.kind == ArrayKind::Rigid);
  geo.validate();
  for (std::size_t a = 0; a < geo.size(); ++a)
    for (std::size_t b = a + 1; b < geo.size(); ++b) CHECK(angular_distance(geo.mics[a].dir, geo.mics[b].dir) > 0.3);
  double sum = 0.0;
  for (const auto& m : geo.mics) sum += m.weight;
  CHECK(sum == Approx(kFourPi).epsilon(1e-14));
  CHECK(12 * (5.0 / 42.0) + 20 * (9.0 / 70.0) == Approx(4.0).epsilon(1e-15));

  CHECK(orthonormality_error(geo, 4).maxCoeff() < 1e-12);
  CHECK(orthonormality_error(geo, 5).maxCoeff() > 0.1);

  const auto equal = ArrayGeometry::icosahedral32(0.042, ArrayKind::Rigid, ArrayGeometry::Weighting::Equal);
  for (const auto& m : equal.mics) CHECK(m.weight == Approx(kFourPi / 32.0));
  const double resid = orthonormality_error(equal, 4).maxCoeff();
  CHECK(resid < 0.1);
  CHECK(resid > 1e-6);
}

TEST_CASE("orthonormality residual at order zero") {
  ArrayGeometry single;
  single.mics.push_back({{0.4, 1.0}, kFourPi});
  CHECK(orthonormality_error(single, 0)(0, 0) < 1e-15);

  ArrayGeometry three;
  three.mics = {{{0.1, 0.0}, 1.0}, {{1.0, 2.0}, 2.0}, {{2.5, 4.0}, kFourPi - 3.0}};
  CHECK(orthonormality_error(three, 0)(0, 0) < 1e-15);
}

TEST_CASE("geometry validation") {
  auto geo = ArrayGeometry::icosahedral32();
  geo.radius = 0.0;
  CHECK_THROWS_AS(geo.validate(), ConfigError);
  geo = ArrayGeometry::icosahedral32();
  geo.mics[0].weight *= 2.0;
  CHECK_THROWS_AS(geo.validate(), ConfigError);
  CHECK_THROWS_AS(ArrayGeometry{}.validate(), ConfigError);
}

TEST_CASE("frequency grid") {
  FrequencyGrid grid;
  CHECK(grid.num_bins() == 65);
  CHECK(grid.frequency(64) == Approx(8000.0));
  CHECK(grid.wavenumber(8) == Approx(2.0 * kPi * 1000.0 / 343.0));
  for (int b = 1; b < grid.num_bins(); ++b) CHECK(grid.wavenumber(b) > grid.wavenumber(b - 1));
}
