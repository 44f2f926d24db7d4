#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lattice_ldp/deviations.hpp"
#include "lattice_ldp/error.hpp"

using namespace lattice_ldp;

namespace {

// Uncoupled sites driven by independent Brownian motions.
Scenario decoupled(int radius) {
  Scenario s;
  s.model.learning.j_bar0 = 0.0;
  s.noise.family = CovarianceFamily::site_white;
  s.dim = 1;
  s.radius = radius;
  s.horizon = 1.0;
  s.dt = 0.01;
  return s;
}

}  // namespace

TEST_CASE("observable registry") {
  auto registry = ObservableRegistry::with_builtins();
  CHECK(registry.names() ==
        std::vector<std::string>{"noise_mass", "site0_sup", "spatial_mean_sup", "terminal_mean"});
  try {
    registry.register_observable("site0_sup", [](const ReplicaResult&, const LatticeShape&) { return 0.0; });
    FAIL("expected DUPLICATE_NAME");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duplicate_name);
  }
  CHECK_THROWS_AS(registry.find("nope"), Error);
  registry.register_observable("site1_terminal", [](const ReplicaResult& r, const LatticeShape& shape) {
    return r.terminal_v[shape.flat({1, 0, 0})];
  });

  const auto scenario = decoupled(2);
  const LatticeShape shape(1, 2);
  const auto grid = TimeGrid::from_step(1.0, 0.01);
  const auto run = simulate_network(scenario.model, build_kappa(1, scenario.kappa),
                                    build_spectral_model(scenario.noise, shape, grid),
                                    {.replicas = 3, .seed = 5, .record_every = 100});
  const auto values = simulate_observable(scenario, registry.find("site0_sup"), 3, 5);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(values[r] == run.replicas[r].v_sup[2]);
    double mass = 0.0;
    for (double x : run.replicas[r].noise_sup) mass += x;
    CHECK(registry.find("noise_mass").evaluate(run.replicas[r], shape) ==
          doctest::Approx(mass / 5.0).epsilon(1e-14));
    CHECK(registry.find("site1_terminal").evaluate(run.replicas[r], shape) ==
          run.replicas[r].terminal_v[3]);
  }
}

TEST_CASE("Wilson interval") {
  const auto zero = wilson_interval(0, 100);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(3.8414588 / 103.8414588).epsilon(1e-6));
  const auto half = wilson_interval(50, 100);
  CHECK(half.lo + half.hi == doctest::Approx(1.0));

  std::mt19937_64 rng(77);
  std::binomial_distribution<std::size_t> draw(10000, 0.1);
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto ci = wilson_interval(draw(rng), 10000);
    covered += (ci.lo <= 0.1 && 0.1 <= ci.hi) ? 1 : 0;
  }
  CHECK(covered / 200.0 >= 0.93);
  CHECK(covered / 200.0 <= 0.97);
}

TEST_CASE("rare-event estimates") {
  const auto registry = ObservableRegistry::with_builtins();
  const auto& noise_mass = registry.find("noise_mass");
  const auto values = simulate_observable(decoupled(2), noise_mass, 400, 9);
  const auto all = estimate_from_values(values, -1.0);
  CHECK(all.p_hat == 1.0);
  const auto none = estimate_from_values(values, 1e6);
  CHECK(none.hits == 0);
  CHECK(none.zero_hits);
  CHECK(none.ci.hi > 0.0);
  double previous = 1.0;
  for (double threshold : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    const auto est = estimate_from_values(values, threshold);
    CHECK(est.p_hat <= previous);
    previous = est.p_hat;
  }
  CHECK_THROWS_AS(estimate_rare_event(decoupled(2), noise_mass, 1.0, 50, 1), Error);
  const auto direct = estimate_rare_event(decoupled(2), noise_mass, 1.0, 400, 9);
  CHECK(direct.hits == estimate_from_values(values, 1.0).hits);
}

TEST_CASE("single-site observable matches the scalar oracle at every n") {
  // Independent scalar FHN paths with their own generator.
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal;
  const double dt = 0.01, threshold = 1.0;
  const int oracle_reps = 20000;
  int oracle_hits = 0;
  for (int r = 0; r < oracle_reps; ++r) {
    double v = 0.0, w = 0.0, sup = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double nv = v + dt * (v - v * v * v / 3.0 - w) + std::sqrt(dt) * normal(rng);
      w += dt * (v + 0.3 - w);
      v = nv;
      sup = std::max(sup, std::abs(v));
    }
    oracle_hits += sup > threshold ? 1 : 0;
  }
  const double p_site = double(oracle_hits) / oracle_reps;

  const auto registry = ObservableRegistry::with_builtins();
  const int ns[] = {1, 2};
  const auto rows = ldp_scaling_report(decoupled(1), ns, registry.find("site0_sup"),
                                       {.threshold = threshold, .replicas = 3000, .seed = 4});
  for (const auto& row : rows) {
    const double p = row.estimate.p_hat;
    const double se = std::sqrt(p_site * (1.0 - p_site) * (1.0 / 3000 + 1.0 / oracle_reps));
    CHECK(std::abs(p - p_site) <= 4.0 * se);
    CHECK(row.norm_log_p == doctest::Approx(-std::log(p) / double(row.sites)));
  }
}

TEST_CASE("scaling report") {
  const auto registry = ObservableRegistry::with_builtins();
  const int ns[] = {1, 2, 3};
  auto scenario = decoupled(1);
  scenario.noise.family = CovarianceFamily::geometric;
  scenario.model.learning.j_bar0 = 0.5;
  const auto rows = ldp_scaling_report(scenario, ns, registry.find("spatial_mean_sup"),
                                       {.replicas = 200, .seed = 2, .workers = 1});
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].sites == std::size_t(2 * ns[i] + 1));
    CHECK(rows[i].estimate.threshold == rows[0].estimate.threshold);
  }
  // auto threshold is the 0.9 quantile at the smallest n
  CHECK(rows[0].estimate.p_hat == doctest::Approx(0.1).epsilon(0.05));

  const auto parallel = ldp_scaling_report(scenario, ns, registry.find("spatial_mean_sup"),
                                           {.replicas = 200, .seed = 2, .workers = 3});
  std::ostringstream a, b;
  write_scaling_csv(a, rows);
  write_scaling_csv(b, parallel);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("n,sites,replicas,threshold,hits,p_hat,ci_lo,ci_hi,norm_log_p\n", 0) == 0);

  // a higher threshold is rarer at fixed n
  const int one[] = {2};
  const auto low = ldp_scaling_report(scenario, one, registry.find("spatial_mean_sup"),
                                      {.threshold = 0.5, .replicas = 300, .seed = 3});
  const auto high = ldp_scaling_report(scenario, one, registry.find("spatial_mean_sup"),
                                       {.threshold = 0.8, .replicas = 300, .seed = 3});
  CHECK(high[0].norm_log_p > low[0].norm_log_p);
}
