// bilin-tf: experiment runner for the bilinear time-frequency toolkit.
//
// One subcommand per experiment; flags override the config file.  Exit codes:
// 0 success, 2 config error, 3 a trial raised a numeric flag.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bilintf/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bilin-tf: bilinear square function and model sum experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int trials = 0;
  bool plot = false;
  bool have_seed = false, have_trials = false, have_out = false;

  std::string chosen;
  for (const auto& name : bilintf::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "config file (key = value with [tables])");
    sub->add_option("--seed", seed, "random seed")->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--trials", trials, "trial count")->each([&](const std::string&) { have_trials = true; });
    sub->add_option("--out", out_dir, "output directory")->each([&](const std::string&) { have_out = true; });
    sub->add_flag("--plot", plot, "emit an SVG plot derived from the CSV");
    sub->callback([&, name]() { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    bilintf::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = bilintf::parse_config_file(config_path);
    cfg.experiment = chosen;
    if (have_seed) cfg.seed = seed;
    if (have_trials) cfg.trials = trials;
    if (have_out) cfg.out = out_dir;
    if (plot) cfg.plot = true;

    const bilintf::RunResult result = bilintf::run_experiment(cfg);
    if (result.exit_code == 2) {
      std::cerr << result.summary << "\n";
      return 2;
    }
    std::cout << "wrote " << result.csv_path << "\n";
    if (!result.svg_path.empty()) std::cout << "wrote " << result.svg_path << "\n";
    if (!result.summary.empty()) std::cout << result.summary;
    if (result.numeric_flag) std::cerr << "numeric flag present in at least one trial\n";
    return result.exit_code;
  } catch (const bilintf::Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == "config-error" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
