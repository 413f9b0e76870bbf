#include "cli_config.hpp"

#include <algorithm>
#include <json.hpp>

#include "momentum/io.hpp"

namespace momentum::cli {

namespace {

using Keys = std::vector<KeySpec>;

Keys sampler_keys(const std::string& chains, const std::string& warmup, const std::string& samples) {
  return {
      {"chains", chains, "number of chains"},
      {"warmup", warmup, "warmup iterations per chain"},
      {"samples", samples, "sampling iterations per chain"},
      {"target_accept", "0.8", "step-size adaptation target"},
      {"max_tree_depth", "10", "maximum trajectory doubling depth"},
      {"seed", "20240101", "random seed"},
      {"scale_prior", "half_normal", "half_normal or inverse_gamma"},
      {"parallel_chains", "true", "run chains on separate threads"},
  };
}

Keys data_keys() {
  return {
      {"games", "", "canonical games file"},
      {"n", "1", "history window length"},
      {"drop_draws", "true", "remove draws before building features"},
      {"holdout", "0", "drop each player's last K decisive games"},
      {"history", "0", "keep only the last K decisive games before the holdout (0 = all)"},
      {"players", "", "comma-separated focal ids to keep (empty = all)"},
  };
}

Keys truth_keys() {
  return {
      {"players", "20", "number of players"},
      {"games", "2000", "decisive games per player"},
      {"mu_beta", "0.3", "population experiential effect"},
      {"gamma1", "0.25", "color effect"},
      {"gamma2", "0.005", "rating effect per point"},
      {"tau1", "0.3", "scale of alpha"},
      {"tau2", "0.3", "scale of beta"},
      {"rho", "0.2", "alpha-beta correlation"},
      {"sigma", "1", "scale of the mu_beta prior"},
      {"sigma_g1", "1", "scale of the gamma1 prior"},
      {"sigma_g2", "1", "scale of the gamma2 prior"},
      {"n", "1", "history window length"},
      {"rating_sd", "50", "sd of the rating difference"},
      {"white_prob", "0.5", "probability of playing white"},
  };
}

Keys concat(std::initializer_list<Keys> parts) {
  Keys out;
  for (const auto& p : parts) {
    for (const auto& k : p) {
      if (std::none_of(out.begin(), out.end(), [&](const KeySpec& e) { return e.name == k.name; })) out.push_back(k);
    }
  }
  return out;
}

const std::map<std::string, Keys>& table() {
  static const std::map<std::string, Keys> t = {
      {"fetch",
       {{"username", "", "account to export"},
        {"output", "", "file receiving the raw response"},
        {"base_url", "https://lichess.org", "server root"},
        {"since", "", "only games created at or after this epoch-ms timestamp"},
        {"resume", "false", "append games newer than the latest one already in output"},
        {"perf_type", "", "optional perfType filter, e.g. bullet"},
        {"max_retries", "5", "attempts after rate limiting or connection failure"},
        {"backoff_ms", "1000", "initial backoff, doubled per retry"},
        {"timeout_s", "60", "read timeout"}}},
      {"ingest",
       {{"input", "", "raw export file"},
        {"format", "auto", "ndjson, pgn or auto"},
        {"focal_id", "", "username whose perspective is taken"},
        {"output_dir", "", "output directory"},
        {"base", "60", "time-control base seconds (-1 keeps every control)"},
        {"inc", "0", "time-control increment seconds"},
        {"rated_only", "true", "keep rated games only"},
        {"standard_only", "true", "keep the standard variant only"},
        {"drop_abnormal", "true", "drop aborted or unknown-status games"}}},
      {"sessions",
       {{"games", "", "canonical games file"},
        {"output_dir", "", "output directory"},
        {"gap", "300", "session gap in seconds"},
        {"thresholds", "10", "comma-separated k for the fraction of sessions longer than k"},
        {"players", "", "comma-separated focal ids to keep (empty = all)"}}},
      {"fit", concat({data_keys(), sampler_keys("4", "1000", "1000"),
                      {{"output_dir", "", "output directory"},
                       {"gate", "true", "exit non-zero when max R-hat exceeds 1.01"}}})},
      {"summarize", {{"draws_dir", "", "fit output directory"}, {"output_dir", "", "output directory"}}},
      {"ppc",
       {{"fit_dir", "", "fit output directory"},
        {"games", "", "canonical games file"},
        {"player", "", "focal id to simulate"},
        {"holdout", "1000", "number of final decisive games simulated"},
        {"drop_draws", "true", "remove draws before selecting the holdout"},
        {"replications", "4000", "trajectories, one per posterior draw"},
        {"seed", "20240101", "random seed"},
        {"opponent_rd", "45", "rating deviation assumed for opponents"},
        {"initial_rd", "45", "rating deviation at the start of the holdout"},
        {"tau", "0.5", "Glicko-2 volatility constraint"},
        {"output_dir", "", "output directory"}}},
      {"permute", concat({data_keys(), sampler_keys("2", "500", "500"),
                          {{"replicates", "1000", "number of permutations"}, {"output_dir", "", "output directory"}}})},
      {"simulate", concat({truth_keys(),
                           {{"seed", "20240101", "random seed"}, {"output_dir", "", "output directory"}}})},
      {"recover", concat({truth_keys(), sampler_keys("4", "1000", "1000"),
                          {{"seeds", "20", "number of synthetic data sets"},
                           {"first_seed", "1", "data seed of the first set"},
                           {"output_dir", "", "output directory"}}})},
      {"sbc",
       concat({{{"replications", "100", "number of prior draws"},
                {"players", "8", "players per data set"},
                {"games", "300", "decisive games per player"},
                {"n", "1", "history window length"},
                {"rating_sd", "50", "sd of the rating difference"},
                {"white_prob", "0.5", "probability of playing white"},
                {"thinned", "63", "posterior draws kept per fit"},
                {"bins", "8", "histogram bins"},
                {"negative_control", "false", "fit with the history covariate sign-flipped"}},
               sampler_keys("4", "500", "500"),
               {{"output_dir", "", "output directory"}}})},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"fetch", "ingest",   "sessions", "fit",     "summarize",
                                                 "ppc",   "permute",  "simulate", "recover", "sbc"};
  return names;
}

std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> text = {
      {"fetch", "download a user's game export as NDJSON"},
      {"ingest", "parse an NDJSON or PGN export into canonical games.tsv"},
      {"sessions", "segment games into sessions and report session statistics"},
      {"fit", "fit the hierarchical model with NUTS"},
      {"summarize", "recompute summaries and intervals from saved draws"},
      {"ppc", "posterior-predictive rating trajectories for a holdout"},
      {"permute", "within-player outcome permutation null distribution"},
      {"simulate", "generate a synthetic cohort with known effects"},
      {"recover", "parameter recovery over several synthetic cohorts"},
      {"sbc", "simulation-based calibration ranks"},
  };
  const auto it = text.find(command);
  if (it == text.end()) throw UsageError("unknown subcommand '" + command + "'");
  return it->second;
}

const std::vector<KeySpec>& keys_for(const std::string& command) {
  const auto it = table().find(command);
  if (it == table().end()) throw UsageError("unknown subcommand '" + command + "'");
  return it->second;
}

namespace {

bool known_key(const std::string& command, const std::string& key) {
  const auto& keys = keys_for(command);
  return std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.name == key; });
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
  ConfigFile out;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : io::split(text, '\n')) {
    ++line_no;
    const std::string_view line = io::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(where + "unterminated section header");
      section = std::string(io::trim(line.substr(1, line.size() - 2)));
      const auto& names = subcommands();
      if (std::find(names.begin(), names.end(), section) == names.end()) {
        throw UsageError(where + "unknown section [" + section + "]");
      }
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw UsageError(where + "expected key = value");
    if (section.empty()) throw UsageError(where + "key outside of a section");
    const std::string key(io::trim(line.substr(0, eq)));
    const std::string value(io::trim(line.substr(eq + 1)));
    if (!known_key(section, key)) throw UsageError(where + "unknown key '" + key + "' in [" + section + "]");
    out[section][key] = value;
  }
  return out;
}

RunConfig::RunConfig(std::string command, std::map<std::string, std::string> values)
    : command_(std::move(command)), values_(std::move(values)) {}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("no configuration key '" + key + "' for " + command_);
  return it->second;
}

long long RunConfig::integer(const std::string& key) const {
  const auto v = io::parse_int(str(key));
  if (!v) throw UsageError(key + ": expected an integer, got '" + str(key) + "'");
  return *v;
}

double RunConfig::real(const std::string& key) const {
  const auto v = io::parse_double(str(key));
  if (!v) throw UsageError(key + ": expected a number, got '" + str(key) + "'");
  return *v;
}

bool RunConfig::boolean(const std::string& key) const {
  const std::string v = io::lower(str(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(key + ": expected true or false, got '" + str(key) + "'");
}

std::uint64_t RunConfig::seed() const {
  const std::string v = str("seed");
  std::uint64_t out = 0;
  if (v.empty()) throw UsageError("seed: empty value");
  for (char c : v) {
    if (c < '0' || c > '9') throw UsageError("seed: expected a non-negative integer, got '" + v + "'");
    out = out * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return out;
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  const std::string v = str(key);
  if (io::trim(v).empty()) return out;
  for (auto part : io::split(v, ',')) {
    const auto t = io::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string RunConfig::hash() const {
  std::string canonical = command_ + "\n";
  for (const auto& [k, v] : values_) canonical += k + "=" + v + "\n";
  return io::sha256_hex(canonical);
}

std::string RunConfig::to_json() const {
  nlohmann::json j;
  j["command"] = command_;
  j["config"] = values_;
  j["config_hash"] = hash();
  return j.dump(2) + "\n";
}

RunConfig resolve(const std::string& command, const ConfigFile* file,
                  const std::map<std::string, std::string>& overrides, std::optional<std::string> env_seed) {
  std::map<std::string, std::string> values;
  for (const auto& k : keys_for(command)) values[k.name] = k.default_value;
  bool seed_given = false;
  if (file) {
    const auto it = file->find(command);
    if (it != file->end()) {
      for (const auto& [k, v] : it->second) {
        values[k] = v;
        seed_given = seed_given || k == "seed";
      }
    }
  }
  for (const auto& [k, v] : overrides) {
    if (!known_key(command, k)) throw UsageError("unknown option '" + k + "' for " + command);
    values[k] = v;
    seed_given = seed_given || k == "seed";
  }
  if (!seed_given && env_seed && values.count("seed")) values["seed"] = *env_seed;
  return RunConfig(command, std::move(values));
}

}  // namespace momentum::cli
