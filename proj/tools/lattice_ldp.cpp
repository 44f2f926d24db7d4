#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lattice_ldp/commands.hpp"

int main(int argc, char** argv) {
  using namespace lattice_ldp;
  CLI::App app{"Lattice FitzHugh-Nagumo networks with spatially correlated noise"};
  app.set_version_flag("--version", std::string(code_version()));
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Run configuration (INI or manifest JSON)")
        ->required();
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override run.seed");
    sub->add_option("--replicas", replicas, "Override run.replicas");
    sub->add_option("--workers", opts.workers, "Worker threads; results do not depend on it")
        ->check(CLI::Range(1u, 1024u));
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate the network and write paths");
  add_common(simulate);
  auto* verify = app.add_subcommand("verify", "Run property suites");
  add_common(verify);
  verify->add_option("--suite", opts.suite, "kernels|noise|dynamics|empirical|all")
      ->check(CLI::IsMember({"kernels", "noise", "dynamics", "empirical", "all"}));
  auto* scaling = app.add_subcommand("scaling", "Rare-event scaling study over n");
  add_common(scaling);
  scaling->add_option("--observable", opts.observable, "Registered observable name");
  scaling->add_option("--threshold", opts.threshold, "'auto' or a number");
  scaling->add_option("--n-list", opts.n_list, "Lattice radii, comma separated")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (auto* sub : {simulate, verify, scaling}) {
    if (sub->get_option("--seed")->count() > 0) opts.seed = seed;
    if (sub->get_option("--replicas")->count() > 0) opts.replicas = replicas;
  }

  if (simulate->parsed()) return cmd_simulate(opts, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(opts, std::cout, std::cerr);
  return cmd_scaling(opts, std::cout, std::cerr);
}
