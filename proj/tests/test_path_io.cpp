#include <random>
#include <sstream>

#include "doctest.h"
#include "lattice_ldp/error.hpp"
#include "lattice_ldp/noise.hpp"
#include "lattice_ldp/path_io.hpp"

using namespace lattice_ldp;

namespace {

PathTable sample_table() {
  CovarianceSpec spec;
  const LatticeShape shape(2, 1);
  const TimeGrid grid(0.5, 20);
  const auto model = build_spectral_model(spec, shape, grid);
  const auto ensemble = sample_noise_paths(model, 3, 5, {.record_every = 7});
  return {shape, grid, 7, ensemble.recorded_steps, ensemble.paths};
}

}  // namespace

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = normal(rng);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("binary path files round-trip exactly") {
  const auto table = sample_table();
  std::stringstream buf;
  write_paths_binary(buf, table);
  const auto back = read_paths_binary(buf);
  CHECK(back.shape == table.shape);
  CHECK(back.grid == table.grid);
  CHECK(back.record_every == 7);
  CHECK(back.steps == table.steps);
  REQUIRE(back.replicas.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) CHECK(back.replicas[r].values == table.replicas[r].values);

  std::stringstream junk("NOTAPATHFILE");
  CHECK_THROWS_AS(read_paths_binary(junk), Error);
  std::string bytes;
  {
    std::stringstream again;
    write_paths_binary(again, table);
    bytes = again.str();
  }
  std::stringstream cut(bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_paths_binary(cut), Error);
}

TEST_CASE("CSV path files round-trip exactly") {
  const auto table = sample_table();
  std::stringstream buf;
  write_paths_csv(buf, table);
  std::string header;
  std::getline(buf, header);
  CHECK(header == "replica,site,time,value");
  buf.seekg(0);
  const auto back = read_paths_csv(buf, table.shape, table.grid);
  CHECK(back.steps == table.steps);
  REQUIRE(back.replicas.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) CHECK(back.replicas[r].values == table.replicas[r].values);

  std::stringstream bad("replica,site,time,value\n0,99,0,1\n");
  CHECK_THROWS_AS(read_paths_csv(bad, table.shape, table.grid), Error);
}
