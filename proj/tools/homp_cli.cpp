// Command-line front end for the experiment harness.
//
//   homp_cli solve   --config run.json [--out dir] [--seed n] [--quiet]
//   homp_cli compare --config grid.json [--jobs n]
//   homp_cli check   --config grid.json
//   homp_cli rate    <dir>
//
// Exit codes: 0 ok, 2 bad config or usage, 3 numerical failure, 4 monitor violation.
#include <iostream>

#include "CLI11.hpp"
#include "homp/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mirror Prox and higher-order Mirror Prox experiments"};
  app.require_subcommand(1);

  homp::CliRequest request;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::string input;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "Output directory (default: $HOMP_OUT_DIR, then ./homp_out)");
    sub->add_option("--seed", seed, "Seed for the random start and monitor reference points");
    sub->add_option("--jobs", request.jobs, "Parallel workers for grid cells")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", request.quiet, "Only report errors");
  };

  for (const char* name : {"solve", "compare", "check"}) {
    CLI::App* sub = app.add_subcommand(name, std::string(name) == "solve"     ? "Run one method for one T"
                                             : std::string(name) == "compare" ? "Run methods over a T grid and fit slopes"
                                                                              : "Run with every monitor and property check");
    sub->add_option("--config", config, "JSON experiment config")->required();
    add_common(sub);
  }
  CLI::App* rate = app.add_subcommand("rate", "Fit merit slopes from <method>_T<T>.csv files");
  rate->add_option("dir", input, "Directory holding the CSV files");
  add_common(rate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  request.command = chosen->get_name();
  if (!config.empty()) request.config_path = config;
  if (chosen->count("--out") > 0) request.out_dir = out;
  if (chosen->count("--seed") > 0) request.seed = seed;
  if (!input.empty()) request.input_dir = input;
  return homp::run_cli(request, std::cout, std::cerr);
}
