#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "lattice_ldp/error.hpp"
#include "lattice_ldp/fft.hpp"
#include "lattice_ldp/lattice.hpp"

using namespace lattice_ldp;

namespace {

// O(N^2) reference DFT with the centered kernel exp(-2 pi i <j,k>/(2n+1)).
std::vector<Complex> naive_dft(const LatticeShape& shape, const std::vector<Complex>& x, int sign) {
  const auto sites = cube_indices(shape);
  std::vector<Complex> out(x.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      double phase = 0.0;
      for (int p = 0; p < shape.dim(); ++p) phase += double(sites[j][p]) * sites[k][p];
      acc += x[j] * std::polar(1.0, sign * 2.0 * std::numbers::pi * phase / shape.side());
    }
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> random_field(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Complex> out(n);
  for (auto& z : out) z = {normal(rng), normal(rng)};
  return out;
}

}  // namespace

TEST_CASE("cube_indices enumerates the cube lexicographically") {
  CHECK(cube_indices(LatticeShape(1, 0)) == std::vector<LatticeIndex>{{0, 0, 0}});
  CHECK(cube_indices(LatticeShape(1, 1)) ==
        std::vector<LatticeIndex>{{-1, 0, 0}, {0, 0, 0}, {1, 0, 0}});

  const LatticeShape square(2, 1);
  const auto sites = cube_indices(square);
  REQUIRE(sites.size() == 9);
  std::vector<LatticeIndex> brute;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) brute.push_back({a, b, 0});
  CHECK(sites == brute);
  for (std::size_t i = 0; i < sites.size(); ++i) CHECK(square.flat(sites[i]) == i);
}

TEST_CASE("lattice shape rejects unsupported dimensions") {
  CHECK_THROWS_AS(LatticeShape(0, 1), Error);
  CHECK_THROWS_AS(LatticeShape(4, 1), Error);
  CHECK_THROWS_AS(LatticeShape(1, -1), Error);
  CHECK(LatticeShape(3, 2).site_count() == 125);
}

TEST_CASE("mod_torus reduces coordinates into [-n, n]") {
  const LatticeShape line(1, 1);
  CHECK(mod_torus({2, 0, 0}, line)[0] == -1);
  CHECK(mod_torus({0, 0, 0}, line)[0] == 0);
  const LatticeShape square(2, 2);
  CHECK(mod_torus({7, -6, 0}, square) == LatticeIndex{2, -1, 0});

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coord(-50, 50);
  for (int trial = 0; trial < 500; ++trial) {
    const LatticeShape shape(1 + trial % 3, trial % 5);
    LatticeIndex a{0, 0, 0}, b{0, 0, 0};
    for (int p = 0; p < shape.dim(); ++p) {
      a[p] = coord(rng);
      b[p] = coord(rng);
    }
    const auto ra = mod_torus(a, shape);
    CHECK(shape.contains(ra));
    CHECK(mod_torus(ra, shape) == ra);
    for (int p = 0; p < shape.dim(); ++p) CHECK((a[p] - ra[p]) % shape.side() == 0);
    CHECK(mod_torus(a + b, shape) == mod_torus(ra + mod_torus(b, shape), shape));
  }
}

TEST_CASE("shift_field follows (S^j X)^m = X^{(m+j) mod V_n}") {
  const LatticeShape line(1, 1);
  const std::vector<double> x{1.0, 2.0, 3.0};  // a, b, c at -1, 0, 1
  CHECK(shift_field(x, line, {0, 0, 0}) == x);
  CHECK(shift_field(x, line, {1, 0, 0}) == std::vector<double>{2.0, 3.0, 1.0});

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const LatticeShape cube(3, 2);
  std::vector<double> field(cube.site_count());
  for (auto& v : field) v = normal(rng);
  const LatticeIndex j{1, -2, 2}, k{-2, 2, 1};
  const auto composed = shift_field(shift_field(field, cube, k), cube, j);
  CHECK(composed == shift_field(field, cube, mod_torus(j + k, cube)));
  CHECK(shift_field(shift_field(field, cube, j), cube, -j) == field);

  const auto shifted = shift_field(field, cube, j);
  std::multiset<double> before(field.begin(), field.end()), after(shifted.begin(), shifted.end());
  CHECK(before == after);
}

TEST_CASE("torus DFT transforms deltas and constants exactly") {
  const LatticeShape shape(2, 2);
  TorusDft dft(shape);
  std::vector<Complex> delta(shape.site_count(), 0.0);
  delta[shape.flat({0, 0, 0})] = 1.0;
  for (const auto& z : dft.forward(delta)) {
    CHECK(z.real() == doctest::Approx(1.0));
    CHECK(std::abs(z.imag()) < 1e-15);
  }
  std::vector<Complex> constant(shape.site_count(), 2.5);
  const auto spec = dft.forward(constant);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double expected = k == shape.flat({0, 0, 0}) ? 2.5 * 25 : 0.0;
    CHECK(std::abs(spec[k] - expected) < 1e-12);
  }
}

TEST_CASE("torus DFT matches the naive transform and round-trips") {
  std::mt19937_64 rng(5);
  for (auto [dim, radius] : {std::pair{1, 0}, {1, 4}, {1, 40}, {2, 1}, {2, 4}, {3, 1}}) {
    const LatticeShape shape(dim, radius);
    REQUIRE(shape.site_count() <= 81);
    TorusDft dft(shape);
    const auto x = random_field(shape.site_count(), rng);
    const auto fast = dft.forward(x);
    const auto slow = naive_dft(shape, x, -1);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      scale = std::max(scale, std::abs(slow[i]));
      err = std::max(err, std::abs(fast[i] - slow[i]));
    }
    CHECK(err <= 1e-10 * scale);

    const auto back = dft.inverse(fast);
    double rt = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      rt += std::norm(back[i] - x[i]);
      norm += std::norm(x[i]);
    }
    CHECK(std::sqrt(rt / norm) < 1e-12);
  }
}

TEST_CASE("filter_real is a circular convolution") {
  const LatticeShape shape(1, 3);
  TorusDft dft(shape);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  std::vector<double> x(shape.site_count()), c(shape.site_count());
  for (auto& v : x) v = normal(rng);
  // symmetric filter so its spectrum is real
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = shape.index(i);
    c[i] = std::exp(-std::abs(k[0]));
  }
  const auto spectrum_c = dft.forward_real(c);
  std::vector<double> spectrum(spectrum_c.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] = spectrum_c[i].real();
  std::vector<double> out(x.size());
  dft.filter_real(x, spectrum, out);
  for (std::size_t j = 0; j < x.size(); ++j) {
    double direct = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto src = mod_torus(shape.index(j) - shape.index(k), shape);
      direct += c[k] * x[shape.flat(src)];
    }
    CHECK(out[j] == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("time grid validates the step") {
  CHECK(TimeGrid::from_step(1.0, 1e-3).steps() == 1000);
  CHECK_THROWS_AS(TimeGrid::from_step(1.0, 0.0), Error);
  CHECK_THROWS_AS(TimeGrid::from_step(1.0, 0.3), Error);
  const TimeGrid grid(2.0, 4);
  CHECK(grid.dt() == 0.5);
  CHECK(grid.time(3) == 1.5);
}

TEST_CASE("path field sup norms and shifts") {
  const LatticeShape shape(1, 1);
  PathField field(shape, 3);
  field.at(1, 0) = -2.0;
  field.at(2, 2) = 1.5;
  CHECK(field.sup_norms() == std::vector<double>{2.0, 0.0, 1.5});
  CHECK(field.sup_norms(2) == std::vector<double>{2.0, 0.0, 0.0});
  const auto shifted = field.shifted({1, 0, 0});
  CHECK(shifted.at(1, 2) == -2.0);
  CHECK(shifted.at(2, 1) == 1.5);
}
