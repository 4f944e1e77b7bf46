#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "lobkin/lobkin.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Args {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int sweep = 0;
};

int run(const std::string& command, const Args& args, bool seed_given, bool quiet) {
  std::ifstream f(args.config, std::ios::binary);
  if (!f) {
    std::cerr << "lobkin: cannot read config " << args.config << "\n";
    return kExitConfig;
  }
  std::ostringstream text;
  text << f.rdbuf();

  lobkin_experiment* exp = nullptr;
  lobkin_status st = lobkin_experiment_new(command.c_str(), text.str().c_str(), &exp);
  if (st == LOBKIN_OK && seed_given) st = lobkin_experiment_set_seed(exp, args.seed);
  if (st == LOBKIN_OK && args.sweep > 0) st = lobkin_experiment_set_sweep(exp, args.sweep);
  if (st == LOBKIN_OK) st = lobkin_experiment_run(exp, args.out.empty() ? nullptr : args.out.c_str());

  int code = 0;
  if (st != LOBKIN_OK) {
    std::cerr << "lobkin " << command << ": " << lobkin_status_string(st) << ": " << lobkin_last_error() << "\n";
    code = st == LOBKIN_ERROR_CONFIG ? kExitConfig : kExitRuntime;
  } else if (!quiet) {
    std::cout << "config " << lobkin_experiment_config_hash(exp) << "\n";
    for (size_t i = 0; i < lobkin_experiment_output_count(exp); ++i) std::cout << lobkin_experiment_output(exp, i) << "\n";
  }
  lobkin_experiment_free(exp);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limit order book simulator and solver"};
  app.set_version_flag("--version", std::string(lobkin_version()));
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Do not list written files");

  Args args;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"simulate", "Simulate the book and write time-weighted statistics"},
      {"solve", "Solve for the limiting best-bid and best-ask densities"},
      {"binned", "Stationary best-quote laws of a binned book"},
      {"strategy", "Optimise a trading strategy and write its profit curve"},
      {"equilibrium", "Equilibria between traders and the spread table"},
  };
  std::vector<CLI::App*> commands;
  for (const auto& s : subs) {
    auto* c = app.add_subcommand(s.name, s.help);
    c->add_option("--config", args.config, "JSON config or manifest")->required()->check(CLI::ExistingFile);
    c->add_option("--seed", args.seed, "Override the config seed");
    c->add_option("--out", args.out, "Output directory");
    if (std::string(s.name) == "simulate")
      c->add_option("--sweep", args.sweep, "Run this many consecutive seeds in parallel")->check(CLI::NonNegativeNumber);
    commands.push_back(c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  for (auto* c : commands) {
    if (c->parsed()) return run(c->get_name(), args, c->count("--seed") > 0, quiet);
  }
  return kExitConfig;
}
