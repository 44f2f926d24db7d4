#include <cmath>
#include <random>

#include "doctest.h"
#include "lattice_ldp/empirical.hpp"
#include "lattice_ldp/error.hpp"

using namespace lattice_ldp;

namespace {

PathField random_field(const LatticeShape& shape, std::size_t points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  PathField field(shape, points);
  for (auto& v : field.values) v = normal(rng);
  return field;
}

const KernelFamily& kernel() {
  static const KernelFamily family = [] {
    KappaSpec spec;
    spec.rate = 0.5;
    spec.scale = 0.2;
    spec.support = 4;
    return build_lambda(build_kappa(2, spec), 128, 32);
  }();
  return family;
}

}  // namespace

TEST_CASE("atoms are the shifted fields") {
  const LatticeShape shape(2, 2);
  const auto field = random_field(shape, 3, 1);
  const auto measure = empirical_measure(field);
  CHECK(measure.atom_count() == 25);
  CHECK(measure.mass() == doctest::Approx(1.0 / 25));
  for (std::size_t a = 0; a < measure.atom_count(); ++a) {
    const auto atom = measure.atom(a);
    CHECK(atom.values == field.shifted(measure.shift(a)).values);
    // periodic interpolant off the cube
    CHECK(measure.value(a, {5, -7, 0}, 2) == measure.value(a, {0, -2, 0}, 2));
  }

  const auto single = empirical_measure(random_field(LatticeShape(1, 0), 4, 2));
  CHECK(single.atom_count() == 1);
  CHECK(single.value(0, {9, 0, 0}, 3) == single.base().at(3, 0));

  const auto constant = empirical_measure(PathField(shape, 2, 1.5));
  for (std::size_t a = 0; a < constant.atom_count(); ++a) CHECK(constant.atom(a).values == constant.base().values);
}

TEST_CASE("stationarity holds exactly") {
  const LatticeShape shape(3, 1);
  const auto measure = empirical_measure(random_field(shape, 2, 3));
  const auto shifts = cube_indices(LatticeShape(3, 2));  // includes wrap-around shifts
  CHECK(stationarity_check(measure, shifts));
  const LatticeIndex identity[] = {{0, 0, 0}};
  CHECK(stationarity_check(measure, identity));
}

TEST_CASE("marginal statistics") {
  const LatticeShape shape(2, 3);
  const auto field = random_field(shape, 4, 5);
  const auto measure = empirical_measure(field);
  const LatticeIndex offsets[] = {{0, 0, 0}, {1, -2, 0}, {3, 3, 0}, {-9, 4, 0}};
  const std::size_t times[] = {0, 3};
  const auto rows = marginal_statistics(measure, offsets, times);
  REQUIRE(rows.size() == 8);
  for (std::size_t t = 0; t < 2; ++t) {
    // two-loop oracle: average over sites of v^{(j+k)}
    double oracle = 0.0;
    for (std::size_t j = 0; j < shape.site_count(); ++j) oracle += field.at(times[t], j);
    oracle /= static_cast<double>(shape.site_count());
    for (std::size_t o = 0; o < 4; ++o) {
      const auto& row = rows[o * 2 + t];
      CHECK(row.mean == rows[t].mean);
      CHECK(row.variance == rows[t].variance);
      CHECK(row.mean == doctest::Approx(oracle).epsilon(1e-13));
      for (std::size_t q = 1; q < row.quantiles.size(); ++q) CHECK(row.quantiles[q] >= row.quantiles[q - 1]);
    }
  }
  const auto flat = marginal_statistics(empirical_measure(PathField(shape, 4, 2.0)), offsets, times);
  for (const auto& row : flat) {
    CHECK(row.mean == 2.0);
    CHECK(row.variance == 0.0);
  }
}

TEST_CASE("spatial covariance") {
  const LatticeShape shape(2, 3);
  const auto measure = empirical_measure(random_field(shape, 1, 7));
  CHECK(spatial_covariance(measure, {0, 0, 0}, 0) >= 0.0);
  CHECK(spatial_covariance(measure, {2, -1, 0}, 0) ==
        doctest::Approx(spatial_covariance(measure, {-2, 1, 0}, 0)).epsilon(1e-14));
  // iid sites on a large torus: off-diagonal covariance is O(|V_n|^{-1/2})
  const LatticeShape big(2, 30);
  const auto iid = empirical_measure(random_field(big, 1, 9));
  CHECK(std::abs(spatial_covariance(iid, {1, 0, 0}, 0)) < 4.0 / std::sqrt(double(big.site_count())));
}

TEST_CASE("bounded-Lipschitz distance") {
  const LatticeShape shape(1, 6);
  const auto a = empirical_measure(random_field(shape, 3, 1));
  const auto b = empirical_measure(random_field(shape, 3, 2));
  const auto c = empirical_measure(random_field(shape, 3, 3));
  const LatticeIndex offsets[] = {{0, 0, 0}, {1, 0, 0}};
  const std::size_t times[] = {1, 2};
  CHECK(bl_distance(a, a, offsets, times) == 0.0);
  // same atom multiset, different base
  CHECK(bl_distance(a, empirical_measure(a.base().shifted({4, 0, 0})), offsets, times) ==
        doctest::Approx(0.0).epsilon(1e-15));
  const double ab = bl_distance(a, b, offsets, times), ba = bl_distance(b, a, offsets, times);
  const double ac = bl_distance(a, c, offsets, times), bc = bl_distance(b, c, offsets, times);
  CHECK(ab == ba);
  CHECK(ab > 0.0);
  CHECK(ab <= 2.0);
  CHECK(ac <= ab + bc + 1e-15);
  CHECK(ab <= ac + bc + 1e-15);

  // two samples of the same law get closer as the torus grows
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const LatticeShape s1(1, 10), s2(1, 400);
    small += bl_distance(empirical_measure(random_field(s1, 3, 10 + s)),
                         empirical_measure(random_field(s1, 3, 20 + s)), offsets, times);
    large += bl_distance(empirical_measure(random_field(s2, 3, 10 + s)),
                         empirical_measure(random_field(s2, 3, 20 + s)), offsets, times);
  }
  CHECK(large < small);
}

TEST_CASE("weighted norms of the atoms") {
  const LatticeShape shape(2, 3);
  const auto zero = weighted_ensemble_norms(empirical_measure(PathField(shape, 3)), kernel());
  CHECK(zero.max == 0.0);
  const auto ones = weighted_ensemble_norms(empirical_measure(PathField(shape, 3, 1.0)), kernel());
  CHECK(ones.min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ones.max == ones.min);

  const auto measure = empirical_measure(random_field(shape, 3, 4));
  const auto summary = weighted_ensemble_norms(measure, kernel());
  CHECK(summary.min <= summary.mean);
  CHECK(summary.mean <= summary.max);
  // direct norm of one materialised atom
  const double direct = weighted_norm(measure.atom(7), kernel());
  CHECK(direct >= summary.min - 1e-15);
  CHECK(direct <= summary.max + 1e-15);
}
