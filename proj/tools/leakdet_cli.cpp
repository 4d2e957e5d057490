// leakdet: detectability and fault estimation for sensor trees.

#include <leakdet/run.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Leak and sensor-fault detectability and estimation for tree-shaped flow-sensor networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(leakdet::kVersion));

  leakdet::RunConfig config;
  double eps_pos = 0.0, eps_tie = 0.0;

  // Shared by every subcommand.
  const auto globals = [&](CLI::App* cmd) {
    cmd->add_option("--topology", config.topology, "topology JSON");
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--cache-dir", config.cache_dir, "catalog cache directory");
    cmd->add_option("--seed", config.seed, "random seed");
  };
  const auto tolerances = [&](CLI::App* cmd) {
    cmd->add_option("--eps-pos", eps_pos, "positivity tolerance, relative to max(1, |residual|)");
    cmd->add_option("--eps-tie", eps_tie, "relative l1 tie tolerance");
    cmd->add_option("--window", config.window, "daily, hourly, all or <N>min");
    cmd->add_flag("!--no-stuck-detection", config.detect_stuck, "treat flat readings as informative");
  };

  auto* detect = app.add_subcommand("detect", "decide detectability of a fault structure");
  globals(detect);
  detect->add_option("--faults", config.faults, "fault structure JSON")->required();

  auto* enumerate = app.add_subcommand("enumerate", "enumerate detectable structures and write the catalog");
  globals(enumerate);
  enumerate->add_option("--force", config.forced, "fault label every structure must contain");
  enumerate->add_option("--exclude", config.excluded, "fault label no structure may contain");

  auto* estimate = app.add_subcommand("estimate", "estimate faults per window from sensor data");
  globals(estimate);
  tolerances(estimate);
  estimate->add_option("--data", config.data, "sensor CSV")->required();

  auto* baseline = app.add_subcommand("baseline", "regularized QP estimate per window");
  globals(baseline);
  tolerances(baseline);
  baseline->add_option("--data", config.data, "sensor CSV")->required();
  baseline->add_option("--lambda", config.lambda, "l1 weight");

  auto* simulate = app.add_subcommand("simulate", "generate synthetic sensor data");
  globals(simulate);
  simulate->add_option("--scenario", config.scenario, "scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 1;
  }

  config.subcommand = app.get_subcommands().front()->get_name();
  for (auto* cmd : {estimate, baseline}) {
    if (cmd->count("--eps-pos")) config.eps_pos = eps_pos;
    if (cmd->count("--eps-tie")) config.eps_tie = eps_tie;
  }
  return leakdet::run(config, std::cout, std::cerr);
}
