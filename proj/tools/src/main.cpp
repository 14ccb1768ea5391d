// pinn: train, evaluate, export and sweep PINN flow cases.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pinn/error.hpp"
#include "pinncli/commands.hpp"
#include "pinncli/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed neural network flow solver"};
  app.require_subcommand(1);

  std::string config_file;
  std::string log_level = "info";
  app.add_option("-c,--config", config_file, "key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  // Every config key is also a flag: --train.epochs 100. Values given on the
  // command line override the config file.
  pinncli::KeyValues flags;
  std::vector<std::string> flag_values(pinncli::known_keys().size());
  for (std::size_t i = 0; i < pinncli::known_keys().size(); ++i) {
    const auto& key = pinncli::known_keys()[i];
    app.add_option("--" + key, flag_values[i])->group("Config keys");
  }

  const char* commands[][2] = {
      {"train", "Train a network; writes history, checkpoint and manifest"},
      {"eval", "Score the checkpoint against paths.reference"},
      {"export", "Write a field grid at export.t"},
      {"sweep", "Train every case x family x scheme cell"},
  };
  for (const auto& c : commands) app.add_subcommand(c[0], c[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ExtrasError& e) {
    std::cerr << "error: unknown option: " << e.what() << '\n';
    return pinncli::kExitError;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    for (std::size_t i = 0; i < flag_values.size(); ++i) {
      const auto& key = pinncli::known_keys()[i];
      if (app.count("--" + key) > 0) flags.emplace_back(key, flag_values[i]);
    }
    const std::filesystem::path file(config_file);
    const auto cfg =
        pinncli::parse_config(config_file.empty() ? nullptr : &file, flags, false);
    return pinncli::dispatch(app.get_subcommands().front()->get_name(), cfg);
  } catch (const pinn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pinncli::kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pinncli::kExitError;
  }
}
