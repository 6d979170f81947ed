// routerlab: command-line front end.
//
//   routerlab <command> --config <file> --out <dir>

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "routerlab/pipelines.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Router attack experiments"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  for (const auto& name : routerlab::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config file")->required();
    sub->add_option("--out", out, "output directory")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : routerlab::kExitConfig;
  }
  const auto* chosen = app.get_subcommands().front();
  return routerlab::run_command(chosen->get_name(), std::filesystem::path(config),
                                std::filesystem::path(out), std::cout, std::cerr);
}
