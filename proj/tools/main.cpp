#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <map>

#include "cli_config.hpp"
#include "commands.hpp"
#include "momentum/io.hpp"

namespace {

std::string option_names(const std::string& key) {
  std::string dashed = key;
  for (char& c : dashed) c = c == '_' ? '-' : c;
  return dashed == key ? "--" + key : "--" + key + ",--" + dashed;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace momentum::cli;

  CLI::App app{"Experiential-effect analysis of online blitz and bullet game streams"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "sectioned key = value configuration file");

  std::map<std::string, std::map<std::string, std::string>> given;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "sectioned key = value configuration file");
    for (const auto& key : keys_for(name)) {
      const std::string help = key.help + (key.default_value.empty() ? "" : " [" + key.default_value + "]");
      sub->add_option_function<std::string>(
          option_names(key.name), [&given, name, k = key.name](const std::string& v) { given[name][k] = v; }, help);
    }
    if (name == "fit") {
      sub->add_flag_callback("--no-gate", [&given] { given["fit"]["gate"] = "false"; },
                             "do not fail when max R-hat exceeds 1.01");
    }
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  try {
    ConfigFile file;
    if (!config_path.empty()) {
      if (!std::filesystem::is_regular_file(config_path)) throw MissingInput("config file '" + config_path + "' not found");
      file = parse_config(momentum::io::read_file(config_path));
    }
    std::optional<std::string> env_seed;
    if (const char* s = std::getenv("MOMENTUM_SEED"); s && *s) env_seed = s;
    const RunConfig cfg = resolve(command, config_path.empty() ? nullptr : &file, given[command], env_seed);
    return run_command(cfg, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MissingInput& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const HttpError& e) {
    std::cerr << "http error: " << e.what() << "\n";
    return kExitHttp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
