#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mrf/commands.hpp"
#include "mrf/config.hpp"
#include "mrf/registry.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mrfkit: verify Minimum Restraint Functions, synthesize trajectories, cross-check with a DP oracle"};
  app.require_subcommand(0, 1);

  std::string print_defaults;
  auto* defaults_opt = app.add_option("--print-defaults", print_defaults,
                                      "Print the full default configuration for an example and exit")
                           ->expected(0, 1)
                           ->default_str("minimum_time_1d");

  std::string config_path;
  mrf::CommandOptions options;
  std::uint64_t seed = 0;

  const char* names[][2] = {{"verify", "Certify the MRF on its level band"},
                            {"synthesize", "Synthesize trajectories and audit them"},
                            {"oracle", "Run the dynamic-programming oracle and compare with U/p0_bar"},
                            {"report", "Run verify, synthesize and oracle; write a combined report"}};
  std::vector<CLI::Option*> seed_opts;
  for (auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Configuration file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", options.threads, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    seed_opts.push_back(sub->add_option("--seed", seed, "Audit sampling seed (overrides the config)"));
    sub->add_flag("--force", options.force, "Synthesize without a verification certificate");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mrf::kExitConfig;
  }

  if (defaults_opt->count() > 0) {
    const std::string system = print_defaults.empty() ? "minimum_time_1d" : print_defaults;
    try {
      std::cout << mrf::default_config(system).dump(2) << "\n";
    } catch (const mrf::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return mrf::kExitConfig;
    }
    return 0;
  }

  auto subs = app.get_subcommands();
  if (subs.empty()) {
    std::cerr << app.help();
    return mrf::kExitConfig;
  }
  for (auto* opt : seed_opts) {
    if (opt->count() > 0) options.seed = seed;
  }
  return mrf::run_command(subs.front()->get_name(), config_path, options, std::cout);
}
