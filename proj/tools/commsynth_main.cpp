// commsynth: plan, verify, simulate and sweep tile/partition plans for a
// distributed forward convolution.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

#include "commsynth/commands.hpp"

using namespace commsynth;

int main(int argc, char** argv) {
  CLI::App app{"Communication-optimal tiling and distribution planner for forward convolution"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string format = "text";
  bool strict = false;
  bool lower_bound = false;
  std::optional<std::string> scope;
  bool count_only = false;
  std::string axis = "M";
  std::vector<Count> values;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--seed", seed, "input-generation seed (overrides the config)");
    sub->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"text", "csv"}));
    sub->add_flag("--strict", strict, "also report the N_c Ker-term cost");
    sub->add_flag("--lower-bound", lower_bound, "plan with M_L = M");
    sub->add_option("--scope", scope, "tile-loop permutations considered")
        ->check(CLI::IsMember({"c-innermost", "all"}));
  };

  CLI::App* plan = app.add_subcommand("plan", "closed form, integer plan, grid and costs");
  CLI::App* verify = app.add_subcommand("verify", "compare against the exhaustive oracle");
  CLI::App* simulate = app.add_subcommand("simulate", "simulate the distributed execution");
  CLI::App* sweep = app.add_subcommand("sweep", "case and cost as M or P varies");
  CLI::App* report = app.add_subcommand("report", "plan, verify and simulate in one report");
  for (CLI::App* sub : {plan, verify, simulate, sweep, report}) common(sub);
  for (CLI::App* sub : {simulate, report}) {
    sub->add_flag("--count-only", count_only, "count volumes without computing values");
  }
  sweep->add_option("--axis", axis, "swept parameter")->check(CLI::IsMember({"M", "P"}));
  sweep->add_option("--values", values, "values to sweep")->required()->check(
      CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (strict) cfg.strict = true;
    if (lower_bound) cfg.lower_bound = true;
    if (scope) cfg.scope = parse_scope(*scope);
    const OutputFormat fmt = format == "csv" ? OutputFormat::kCsv : OutputFormat::kText;
    const SimMode mode = count_only ? SimMode::kCountOnly : SimMode::kFullCompute;

    CommandResult result;
    if (plan->parsed()) {
      result = cmd_plan(cfg, fmt);
    } else if (verify->parsed()) {
      result = cmd_verify(cfg, fmt);
    } else if (simulate->parsed()) {
      result = cmd_simulate(cfg, fmt, mode);
    } else if (sweep->parsed()) {
      result = cmd_sweep(cfg, axis == "M" ? SweepAxis::kM : SweepAxis::kP, values, fmt);
    } else {
      result = cmd_report(cfg, fmt, mode);
    }
    std::cout << result.output;
    return result.ok ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error " << e.what() << '\n';
    return 2;
  }
}
