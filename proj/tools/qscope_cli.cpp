// qscope: run focusing, trajectory, SNR and Wigner experiments from a config file or flags.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "qscope/config.hpp"
#include "qscope/errors.hpp"
#include "qscope/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qscope: scanning-microscope simulator"};
  app.set_version_flag("--version", std::string(QSCOPE_VERSION));

  std::string subcommand, config_path;
  app.add_option("subcommand", subcommand, "focus | movie | scan | full | sre | snr | wigner");
  app.add_option("--config", config_path, "key = value configuration file");

  std::map<std::string, std::string> values;
  for (const auto& key : qscope::config_keys()) {
    if (key.name == "subcommand") continue;
    std::string help = key.help;
    if (!key.default_value.empty()) help += " [" + key.default_value + "]";
    app.add_option("--" + key.name, values[key.name], help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::map<std::string, std::string> flags;
  for (const auto& [name, value] : values)
    if (app.get_option("--" + name)->count() > 0) flags[name] = value;
  if (!subcommand.empty()) flags["subcommand"] = subcommand;

  try {
    qscope::RunConfig cfg = qscope::parse_config_file(config_path, flags);
    qscope::RunReport report = qscope::run(cfg);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << report.outputs.size() << " files to " << cfg.output_dir << '\n';
    return 0;
  } catch (const qscope::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const qscope::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
