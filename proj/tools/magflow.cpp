// Command-line front end: magflow <subcommand> --config run.ini [--output DIR]
#include <CLI11.hpp>
#include <json.hpp>
#include <iostream>

#include "magflow/cli.hpp"
#include "magflow/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Magnetic geodesic flows on surfaces"};
  app.require_subcommand(1);
  std::string config_path, output;
  for (const std::string& name : magflow::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "INI run configuration")->required();
    sub->add_option("-o,--output", output, "output directory (overrides run.output)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  magflow::RunConfig cfg;
  try {
    cfg = magflow::parse_config_file(config_path);
  } catch (const magflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    std::cout << nlohmann::ordered_json{{"outcome", "error"}, {"error", e.what()}}.dump() << std::endl;
    return 2;
  }
  if (!output.empty()) cfg.run.output = output;
  return magflow::execute(cfg, command, std::cout);
}
