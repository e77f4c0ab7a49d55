#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "ond/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scenario runner for the nonlinear-damping motion-control benchmarks"};
  app.set_version_flag("--version", std::string(ond::kVersion));

  bool list = false;
  app.add_flag("--list", list, "List the registered scenarios and exit");

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file (seed/output overrides; custom runs)");
    cmd->add_option("--out", out_dir, "Output directory (default: out)");
    cmd->add_option("--seed", seed, "Seed override for every noise stream")
        ->each([&](const std::string&) { seed_set = true; });
  };

  std::string selector;
  CLI::App* run = app.add_subcommand("run", "Run every scenario matching a glob selector");
  run->add_option("selector", selector, "Scenario name or glob (e.g. 'figures/*', 'custom')")
      ->required();
  add_common(run);
  add_common(&app);

  CLI11_PARSE(app, argc, argv);

  if (list || (!run->parsed() && selector.empty())) {
    for (const auto& name : ond::list_scenarios()) std::printf("%s\n", name.c_str());
    return 0;
  }

  ond::RunOptions opts;
  if (!config.empty()) opts.config = config;
  if (!out_dir.empty()) opts.output_dir = out_dir;
  if (seed_set) opts.seed = seed;

  try {
    return ond::run_selector(selector, opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
