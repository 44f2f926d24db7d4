// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [path-to-lattice_ldp-executable]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "lattice_ldp/commands.hpp"
#include "lattice_ldp/dynamics.hpp"
#include "lattice_ldp/empirical.hpp"
#include "lattice_ldp/kernels.hpp"
#include "lattice_ldp/noise.hpp"

using namespace lattice_ldp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

KappaSpec reference_kappa() {
  KappaSpec spec;
  spec.rate = 0.5;
  spec.support = 40;
  return spec;
}

const KernelFamily& reference_kernel() {
  static const KernelFamily k = build_lambda(build_kappa(1, reference_kappa()), 4096, 60);
  return k;
}

CovarianceSpec geometric_noise() {
  CovarianceSpec spec;
  spec.family = CovarianceFamily::geometric;
  spec.rho = 0.4;
  return spec;
}

Outcome weight_lemma() {
  const auto start = std::chrono::steady_clock::now();
  const auto kernel = build_lambda(build_kappa(1, reference_kappa()), 4096, 60);
  const auto r = check_domination(kernel);
  const double elapsed = seconds_since(start);
  const bool pass = r.min_lambda > 0.0 && r.normalization_error <= 1e-8 && r.max_violation <= 1e-8 &&
                    elapsed < 5.0;
  return {pass, "min lambda " + num(r.min_lambda) + ", |sum-1| " + num(r.normalization_error) +
                    ", max violation/lambda " + num(r.max_violation) + ", " + num(elapsed) + " s"};
}

Outcome noise_covariance(const NoiseEnsemble*& keep) {
  const auto start = std::chrono::steady_clock::now();
  const LatticeShape shape(1, 4);
  const TimeGrid grid(1.0, 1000);
  std::vector<std::pair<LatticeIndex, LatticeIndex>> pairs;
  for (const auto& m : cube_indices(shape)) pairs.push_back({{0, 0, 0}, m});
  const std::pair<double, double> times[] = {{1.0, 1.0}};

  const auto model = build_spectral_model(geometric_noise(), shape, grid);
  static NoiseEnsemble ensemble;
  ensemble = sample_noise_paths(model, 20000, 2024, {.record_every = 1000});
  keep = &ensemble;
  const auto cov = verify_covariance(ensemble, model, pairs, times);
  double closed_form = 0.0;
  for (const auto& e : cov.entries) {
    const int k = std::abs(mod_torus(e.second, shape)[0]);
    closed_form = std::max(closed_form, std::abs(e.expected - std::pow(0.4, k)));
  }

  CovarianceSpec white;
  white.family = CovarianceFamily::site_white;
  const auto white_model = build_spectral_model(white, shape, grid);
  const auto white_paths = sample_noise_paths(white_model, 20000, 2025, {.record_every = 1000});
  const auto white_cov = verify_covariance(white_paths, white_model, pairs, times);
  const double elapsed = seconds_since(start);
  const bool pass = cov.within(4.0) && white_cov.within(4.0) && closed_form <= 1e-12 && elapsed < 300.0;
  return {pass, "geometric max |z| " + num(cov.max_abs_z) + ", site-white max |z| " +
                    num(white_cov.max_abs_z) + " over 9 offsets (tol 4), target vs 0.4^|m| " +
                    num(closed_form) + ", " + num(elapsed) + " s"};
}

Outcome equivariance_and_stationarity(const PathEnsemble& reference_run) {
  const LatticeShape shape(1, 4);
  const TimeGrid grid(1.0, 1000);
  const NetworkModel model;
  Engine engine = replica_engine(33, 0);
  std::uniform_int_distribution<int> coord(-4, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = brownian_drive(shape, grid, engine);
    const LatticeIndex j{coord(engine), 0, 0};
    const auto lhs = solve_driven(w.shifted(j), grid, 4, model);
    const auto rhs = solve_driven(w, grid, 4, model).shifted(j);
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      worst = std::max(worst, std::abs(lhs.values[i] - rhs.values[i]));
    }
  }
  // a 2-d lattice as well, with diagonal shifts
  const LatticeShape plane(2, 2);
  const TimeGrid short_grid(0.5, 100);
  std::uniform_int_distribution<int> c2(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = brownian_drive(plane, short_grid, engine);
    const LatticeIndex j{c2(engine), c2(engine), 0};
    const auto lhs = solve_driven(w.shifted(j), short_grid, 2, model);
    const auto rhs = solve_driven(w, short_grid, 2, model).shifted(j);
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      worst = std::max(worst, std::abs(lhs.values[i] - rhs.values[i]));
    }
  }
  const auto shifts = cube_indices(shape);
  std::size_t stationary = 0;
  for (const auto& r : reference_run.replicas) {
    stationary += stationarity_check(empirical_measure(r.v), shifts) ? 1 : 0;
    stationary += stationarity_check(empirical_measure(r.w), shifts) ? 1 : 0;
  }
  const std::size_t measures = 2 * reference_run.replicas.size();
  return {worst <= 1e-10 && stationary == measures,
          "max |Psi(S^j w) - S^j Psi(w)| " + num(worst) + " over 40 inputs (tol 1e-10); " +
              std::to_string(stationary) + "/" + std::to_string(measures) + " measures stationary"};
}

Outcome lipschitz() {
  const LatticeShape shape(1, 4);
  const TimeGrid grid(1.0, 1000);
  const NetworkModel model;
  Engine engine = replica_engine(44, 0);
  double worst = -1e300, log_psi = 0.0;
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto w = brownian_drive(shape, grid, engine);
    const auto u = brownian_drive(shape, grid, engine);
    const auto r = lipschitz_ratio(w, u, grid, model, reference_kernel());
    worst = std::max(worst, r.log_ratio);
    log_psi = r.log_psi_c;
    if (!r.within) ++violations;
  }
  const auto constants = model_constants(model.fhn, reference_kernel(), 1.0);
  return {violations == 0, "max log ratio " + num(worst) + " vs log Psi_C " + num(log_psi) +
                               " (C = " + num(constants.c) + "), " + std::to_string(violations) +
                               " violations in 100 pairs"};
}

Outcome truncation() {
  const auto start = std::chrono::steady_clock::now();
  const LatticeShape shape(1, 12);
  const TimeGrid grid(1.0, 1000);
  NetworkModel model;
  model.learning.support = 12;
  Engine engine = replica_engine(55, 0);
  const auto w = brownian_drive(shape, grid, engine);
  std::vector<TruncationGap> gaps;
  for (int n : {2, 4, 6}) gaps.push_back(truncation_gap(w, grid, n, model, reference_kernel()));
  const double c3 = gaps[0].bound_ratio;
  bool pass = gaps[1].gap < gaps[0].gap && gaps[2].gap < gaps[1].gap;
  std::string detail = "gaps";
  for (const auto& g : gaps) {
    const double envelope = g.kappa_tail * c3 * (static_cast<double>(shape.site_count()) + g.input_mass);
    pass = pass && g.gap <= envelope;
    detail += " n=" + std::to_string(g.n) + ": " + num(g.gap) + " <= " + num(envelope);
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < 120.0;
  return {pass, detail + "; C3 " + num(c3) + ", " + num(elapsed) + " s"};
}

Outcome hebbian(const PathEnsemble& run) {
  double margin = 1e300;
  std::size_t clamps = 0;
  for (const auto& r : run.replicas) {
    margin = std::min(margin, r.synapses.min_margin);
    clamps += r.synapses.clamp_events;
  }

  const LatticeShape shape(1, 4);
  const TimeGrid grid(1.0, 1000);
  NetworkModel model;
  model.learning.activity = parse_response("zero");
  const SynapticState initial(shape, model.learning, synapse_offsets(1, 4));
  const auto decay = simulate_network(model, build_kappa(1, reference_kappa()),
                                      build_spectral_model(geometric_noise(), shape, grid),
                                      {.replicas = 1, .seed = 66, .record_every = 1000});
  const double expected = initial.mean() * std::exp(-model.learning.j_dec * 1.0);
  const double rel = std::abs(decay.replicas[0].synapses.terminal_mean - expected) / expected;
  return {margin >= 0.0 && rel <= 2.0 * grid.dt(),
          "min(J, Jbar - J) " + num(margin) + " over " + std::to_string(run.replicas.size()) +
              " replicas (" + std::to_string(clamps) + " clamps); decay rel. error " + num(rel) +
              " (tol 2 dt = 0.002)"};
}

Outcome euler() {
  NetworkModel model;
  model.fhn.a_fr = 0.3;
  const auto conv = euler_self_convergence(model, LatticeShape(1, 4), 1.0, 1e-3, 3);
  return {conv.differences[0] <= 1e-3 && conv.ratios[0] >= 1.8,
          "sup diff dt=1e-3 vs 5e-4 " + num(conv.differences[0]) + " (tol 1e-3), halving ratio " +
              num(conv.ratios[0]) + " (min 1.8)"};
}

Outcome tails(const NoiseEnsemble& ensemble) {
  const auto model = build_spectral_model(geometric_noise(), ensemble.shape, ensemble.grid);
  const double sites = static_cast<double>(ensemble.shape.site_count());
  double mean = 0.0;
  for (const auto& sup : ensemble.sup_norms) {
    double total = 0.0;
    for (double v : sup) total += v;
    mean += total / sites;
  }
  mean /= static_cast<double>(ensemble.replica_count());
  std::vector<double> levels;
  for (double f : {0.5, 1.0, 2.0, 4.0}) levels.push_back(f * mean);
  const auto direct = tail_statistic(ensemble, levels);
  std::vector<double> logs;
  std::string detail = "mean " + num(mean) + "; log P/|V|";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (direct[i].hits >= 100) {
      logs.push_back(direct[i].log_probability_per_site);
      detail += " " + num(logs.back());
    } else {
      const auto t = tilted_tail_estimate(model, levels[i], 20000, 800 + i);
      logs.push_back(t.log_probability_per_site);
      detail += " " + num(logs.back()) + "(tilted)";
    }
  }
  bool pass = true;
  for (std::size_t i = 1; i < logs.size(); ++i) {
    pass = pass && std::isfinite(logs[i]) && logs[i] < logs[i - 1];
  }
  const double bs[] = {1.0, 2.0, 3.0};
  const auto rows = brownian_sup_tail_check(50000, 1.0, 1000, bs, 77);
  detail += "; Brownian sup";
  for (const auto& r : rows) {
    pass = pass && r.within;
    detail += " b=" + num(r.b) + ": " + num(r.empirical) + " <= " + num(r.bound) + "+4se";
  }
  return {pass, detail};
}

Outcome eta_decay() {
  std::vector<double> etas;
  std::string detail = "eta_*";
  for (int n : {2, 4, 8, 16}) {
    etas.push_back(build_spectral_model(geometric_noise(), LatticeShape(1, n), TimeGrid(1.0, 1000)).eta_star());
    detail += " n=" + std::to_string(n) + ": " + num(etas.back());
  }
  bool pass = true;
  for (std::size_t i = 1; i < etas.size(); ++i) pass = pass && etas[i] < etas[i - 1];
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("lattice_ldp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[lattice]\nn = 3\n[time]\ndt = 0.002\n"
                                    "[run]\nseed = 5\nreplicas = 40\nrecord_every = 4\n"
                                    "outputs = paths_csv, noise_csv, summary\n";
  auto run = [&](const std::string& args) {
    if (cli.empty()) return -1;
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  const std::string cfg = " --config \"" + (dir / "run.ini").string() + "\"";
  std::vector<std::string> outs;
  bool ok = true;
  for (const std::string& tag : {"a", "b", "c"}) {
    const std::string workers = tag == "b" ? "8" : "1";
    const auto out = (dir / tag).string();
    ok = ok && run("simulate" + cfg + " --workers " + workers + " --out \"" + out + "\"") == 0;
    ok = ok && run("scaling" + cfg + " --replicas 200 --n-list 1,2,3 --workers " + workers +
                   " --out \"" + out + "\"") == 0;
  }
  std::size_t compared = 0;
  for (const char* f : {"paths.csv", "noise.csv", "scaling.csv"}) {
    const auto a = slurp(dir / "a" / f);
    ok = ok && !a.empty() && a == slurp(dir / "b" / f) && a == slurp(dir / "c" / f);
    ++compared;
  }
  fs::remove_all(dir);
  if (cli.empty()) return {false, "no CLI executable given"};
  return {ok, std::to_string(compared) + " CSV outputs identical across reruns with 1 and 8 workers"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  };

  const NoiseEnsemble* noise_ensemble = nullptr;
  PathEnsemble reference_run;
  {
    const LatticeShape shape(1, 4);
    const TimeGrid grid(1.0, 1000);
    reference_run = simulate_network(NetworkModel{}, build_kappa(1, reference_kappa()),
                                     build_spectral_model(geometric_noise(), shape, grid),
                                     {.replicas = 1000, .seed = 6, .record_every = 50});
  }

  report(1, "weight lemma", weight_lemma);
  report(2, "noise covariance", [&] { return noise_covariance(noise_ensemble); });
  report(3, "shift equivariance and stationarity", [&] { return equivariance_and_stationarity(reference_run); });
  report(4, "Lipschitz bound", lipschitz);
  report(5, "truncation decay", truncation);
  report(6, "Hebbian invariants", [&] { return hebbian(reference_run); });
  report(7, "Euler self-convergence", euler);
  report(8, "tail behavior", [&] {
    if (!noise_ensemble) return Outcome{false, "noise ensemble unavailable"};
    return tails(*noise_ensemble);
  });
  report(9, "eta decay", eta_decay);
  report(10, "determinism", [&] { return determinism(cli); });
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
