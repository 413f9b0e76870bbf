#pragma once

// Run configuration for the momentum command line: key tables per
// subcommand, the sectioned key = value config file, flag overrides and the
// resolved, hashed configuration written next to every output.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace momentum::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitUsage = 2,
  kExitMissingInput = 3,
  kExitConvergence = 4,
  kExitHttp = 5,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HttpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

const std::vector<std::string>& subcommands();
/// One-line description of a subcommand.
std::string describe(const std::string& command);
/// Throws UsageError for an unknown subcommand.
const std::vector<KeySpec>& keys_for(const std::string& command);

/// section -> key -> value
using ConfigFile = std::map<std::string, std::map<std::string, std::string>>;

/// Lines are `[section]`, `key = value`, blank, or comments starting with
/// '#' or ';'. Sections must name subcommands and keys must belong to their
/// section; anything else is a UsageError.
ConfigFile parse_config(std::string_view text);

class RunConfig {
 public:
  RunConfig(std::string command, std::map<std::string, std::string> values);

  const std::string& command() const noexcept { return command_; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::string str(const std::string& key) const;
  long long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::uint64_t seed() const;
  std::vector<std::string> list(const std::string& key) const;

  /// {"command": ..., "config": {...}, "config_hash": ...}
  std::string to_json() const;
  /// SHA-256 of the command and sorted key = value lines.
  std::string hash() const;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

/// Defaults, then the command's section of `file`, then `overrides`. When
/// the command has a seed key that neither the file nor the overrides set,
/// `env_seed` (MOMENTUM_SEED) is used if present.
RunConfig resolve(const std::string& command, const ConfigFile* file,
                  const std::map<std::string, std::string>& overrides,
                  std::optional<std::string> env_seed);

}  // namespace momentum::cli
