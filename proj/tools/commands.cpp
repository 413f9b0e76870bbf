#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

#include "fetch.hpp"
#include "momentum/diagnostics.hpp"
#include "momentum/features.hpp"
#include "momentum/fit.hpp"
#include "momentum/glicko.hpp"
#include "momentum/ingest.hpp"
#include "momentum/io.hpp"
#include "momentum/kernels.hpp"
#include "momentum/model.hpp"
#include "momentum/sampler.hpp"
#include "momentum/validate.hpp"

namespace momentum::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string required(const RunConfig& cfg, const std::string& key) {
  std::string v = cfg.str(key);
  if (v.empty()) throw UsageError(cfg.command() + ": --" + key + " is required");
  return v;
}

fs::path existing_file(const RunConfig& cfg, const std::string& key) {
  const fs::path p = required(cfg, key);
  if (!fs::is_regular_file(p)) throw MissingInput(cfg.command() + ": " + key + " '" + p.string() + "' not found");
  return p;
}

fs::path existing_dir(const RunConfig& cfg, const std::string& key) {
  const fs::path p = required(cfg, key);
  if (!fs::is_directory(p)) throw MissingInput(cfg.command() + ": " + key + " '" + p.string() + "' not found");
  return p;
}

int positive(const RunConfig& cfg, const std::string& key) {
  const long long v = cfg.integer(key);
  if (v < 1) throw UsageError(key + " must be positive");
  return static_cast<int>(v);
}

int non_negative(const RunConfig& cfg, const std::string& key) {
  const long long v = cfg.integer(key);
  if (v < 0) throw UsageError(key + " must not be negative");
  return static_cast<int>(v);
}

// Collects every file written below one directory and closes it with the
// resolved configuration and a content-hash manifest.
class OutputDir {
 public:
  explicit OutputDir(const RunConfig& cfg) : cfg_(cfg), root_(required(cfg, "output_dir")) {
    fs::create_directories(root_);
  }

  const fs::path& root() const noexcept { return root_; }

  void write(const std::string& relative, std::string_view contents) {
    io::write_file(root_ / relative, contents);
    files_.insert(relative);
  }

  void finish() {
    write("resolved_config.json", cfg_.to_json());
    json files = json::array();
    for (const auto& rel : files_) {
      files.push_back({{"path", rel},
                       {"sha256", io::sha256_file(root_ / rel)},
                       {"bytes", static_cast<std::uint64_t>(fs::file_size(root_ / rel))}});
    }
    io::write_file(root_ / "manifest.json",
                   json({{"config_hash", cfg_.hash()}, {"files", files}}).dump(2) + "\n");
  }

 private:
  const RunConfig& cfg_;
  fs::path root_;
  std::set<std::string> files_;
};

sampler::SamplerConfig sampler_config(const RunConfig& cfg) {
  sampler::SamplerConfig s;
  s.chains = positive(cfg, "chains");
  s.warmup_iters = non_negative(cfg, "warmup");
  s.sampling_iters = positive(cfg, "samples");
  s.target_accept = cfg.real("target_accept");
  if (!(s.target_accept > 0.0 && s.target_accept < 1.0)) throw UsageError("target_accept must lie in (0, 1)");
  s.max_tree_depth = positive(cfg, "max_tree_depth");
  s.seed = cfg.seed();
  s.parallel_chains = cfg.boolean("parallel_chains");
  return s;
}

model::ModelOptions model_options(const RunConfig& cfg) {
  model::ModelOptions o;
  const std::string prior = cfg.str("scale_prior");
  if (prior == "half_normal") {
    o.scale_prior = model::ScalePrior::half_normal;
  } else if (prior == "inverse_gamma") {
    o.scale_prior = model::ScalePrior::inverse_gamma;
  } else {
    throw UsageError("scale_prior must be half_normal or inverse_gamma");
  }
  return o;
}

std::vector<ingest::GameRecord> load_games(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("cannot open " + path.string());
  ingest::ParseResult parsed = ingest::read_canonical(in);
  if (!parsed.rejects.empty()) {
    const auto& r = parsed.rejects.front();
    throw std::runtime_error(path.string() + ":" + std::to_string(r.line_no) + ": " + r.reason);
  }
  return std::move(parsed.records);
}

std::vector<features::PlayerGames> select_players(std::vector<features::PlayerGames> groups,
                                                  const std::vector<std::string>& wanted) {
  if (wanted.empty()) return groups;
  std::vector<features::PlayerGames> out;
  for (const auto& id : wanted) {
    const auto it = std::find_if(groups.begin(), groups.end(),
                                 [&](const features::PlayerGames& g) { return ingest::same_user(g.player_id, id); });
    if (it == groups.end()) throw UsageError("player '" + id + "' does not appear in the games file");
    out.push_back(*it);
  }
  return out;
}

std::vector<ingest::GameRecord> decisive_if(const std::vector<ingest::GameRecord>& records, bool drop_draws) {
  if (!drop_draws) return records;
  std::vector<ingest::GameRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const ingest::GameRecord& r) { return r.outcome != ingest::Outcome::draw; });
  return out;
}

// Records per player after draw removal and the holdout/history windows.
std::vector<features::PlayerGames> prepared_games(const RunConfig& cfg) {
  const auto records = load_games(existing_file(cfg, "games"));
  auto groups = select_players(features::group_by_player(records), cfg.list("players"));
  const bool drop = cfg.boolean("drop_draws");
  const auto holdout = static_cast<std::size_t>(non_negative(cfg, "holdout"));
  const auto history = static_cast<std::size_t>(non_negative(cfg, "history"));
  for (auto& g : groups) {
    auto kept = decisive_if(g.records, drop);
    kept.resize(kept.size() > holdout ? kept.size() - holdout : 0);
    if (history > 0 && kept.size() > history) kept.erase(kept.begin(), kept.end() - static_cast<std::ptrdiff_t>(history));
    g.records = std::move(kept);
  }
  return groups;
}

features::Dataset dataset_from_config(const RunConfig& cfg, std::ostream& log) {
  features::FeatureConfig fc;
  fc.n = positive(cfg, "n");
  fc.drop_draws = cfg.boolean("drop_draws");
  auto built = features::build_dataset(prepared_games(cfg), fc);
  for (const auto& w : built.warnings) log << "warning: " << w << "\n";
  return std::move(built.dataset);
}

void write_dataset(OutputDir& out, const features::Dataset& data, const std::string& config_hash) {
  std::ostringstream csv;
  features::write_dataset_csv(csv, data);
  out.write("dataset.csv", csv.str());
  out.write("dataset.json", features::dataset_sidecar_json(data, config_hash));
}

void write_draws(OutputDir& out, const sampler::PosteriorDraws& draws) {
  for (std::size_t c = 0; c < draws.num_chains; ++c) {
    out.write("draws/chain_" + std::to_string(c + 1) + ".csv", sampler::chain_csv(draws, c));
    out.write("draws/diagnostics_chain_" + std::to_string(c + 1) + ".csv", sampler::chain_diagnostics_csv(draws, c));
  }
}

sampler::PosteriorDraws read_draws(const fs::path& dir) {
  fs::path draws_dir = dir / "draws";
  if (!fs::is_directory(draws_dir)) draws_dir = dir;
  const std::regex pattern(R"(chain_(\d+)\.csv)");
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(draws_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) files.emplace_back(std::stoi(m[1].str()), entry.path());
  }
  if (files.empty()) throw MissingInput("no chain_<k>.csv files in " + draws_dir.string());
  std::sort(files.begin(), files.end());
  std::vector<std::string> texts;
  for (const auto& f : files) texts.push_back(io::read_file(f.second));
  return sampler::read_chain_csvs(texts);
}

std::string intervals_csv(const std::vector<diagnostics::SummaryRow>& rows) {
  std::string out = "name,level,lo,hi,median\n";
  for (const auto& r : rows) {
    out += io::join_row({r.name, "0.66", io::format_double(r.q17), io::format_double(r.q83), io::format_double(r.q50)});
    out += io::join_row(
        {r.name, "0.95", io::format_double(r.q2_5), io::format_double(r.q97_5), io::format_double(r.q50)});
  }
  return out;
}

std::string effects_csv(const sampler::PosteriorDraws& draws, const features::Dataset& data) {
  std::string out = "player_id,xbar,mean,q2.5,q17,q50,q83,q97.5\n";
  for (std::size_t j = 0; j < data.num_players(); ++j) {
    const auto beta = draws.pooled(draws.index_of("beta[" + std::to_string(j + 1) + "]"));
    std::vector<double> delta(beta.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
      delta[k] = model::effect_to_delta_win_prob(beta[k], data.xbar[j]);
      sum += delta[k];
    }
    std::sort(delta.begin(), delta.end());
    const auto q = [&](double p) { return io::format_double(diagnostics::quantile_sorted(delta, p)); };
    out += io::join_row({data.player_ids[j], io::format_double(data.xbar[j]),
                         io::format_double(sum / static_cast<double>(delta.size())), q(0.025), q(0.17), q(0.5),
                         q(0.83), q(0.975)});
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_fetch(const RunConfig& cfg, std::ostream& log) {
  FetchOptions opt;
  opt.base_url = required(cfg, "base_url");
  opt.username = required(cfg, "username");
  opt.perf_type = cfg.str("perf_type");
  opt.max_retries = non_negative(cfg, "max_retries");
  opt.backoff_ms = non_negative(cfg, "backoff_ms");
  opt.timeout_s = positive(cfg, "timeout_s");
  const fs::path output = required(cfg, "output");
  bool append = false;
  if (!cfg.str("since").empty()) opt.since_ms = cfg.integer("since");
  if (cfg.boolean("resume") && fs::exists(output)) {
    if (const auto latest = latest_created_at(output)) {
      opt.since_ms = *latest + 1;
      append = true;
    }
  }
  const FetchResult r = fetch_games(opt, output, append);
  log << "fetched " << r.bytes << " bytes in " << r.attempts << " attempt(s) to " << output.string() << "\n";
  return kExitOk;
}

int cmd_ingest(const RunConfig& cfg, std::ostream& log) {
  const fs::path input = existing_file(cfg, "input");
  const std::string focal = required(cfg, "focal_id");
  std::string format = cfg.str("format");
  if (format == "auto") {
    const std::string ext = io::lower(input.extension().string());
    format = ext == ".pgn" ? "pgn" : "ndjson";
  }
  std::ifstream in(input, std::ios::binary);
  ingest::ParseResult parsed;
  if (format == "ndjson") {
    parsed = ingest::parse_ndjson_export(in, focal);
  } else if (format == "pgn") {
    parsed = ingest::parse_pgn_export(in, focal);
  } else {
    throw UsageError("format must be ndjson, pgn or auto");
  }
  std::vector<ingest::Reject> rejects = std::move(parsed.rejects);
  ingest::ParseResult sorted = ingest::sort_and_dedupe(std::move(parsed.records));
  for (auto& r : sorted.rejects) {
    r.reason = "duplicate start time (record " + std::to_string(r.line_no) + "): " + r.reason;
    rejects.push_back(r);
  }
  std::optional<ingest::TimeControlFilter> filter;
  const long long base = cfg.integer("base");
  if (base >= 0) filter = ingest::TimeControlFilter{static_cast<int>(base), non_negative(cfg, "inc")};
  auto games = ingest::filter_games(sorted.records, filter, cfg.boolean("rated_only"), cfg.boolean("standard_only"));
  if (cfg.boolean("drop_abnormal")) games = ingest::drop_abnormal(games);

  OutputDir out(cfg);
  std::ostringstream tsv, rej;
  ingest::write_canonical(tsv, games);
  ingest::write_rejects(rej, rejects);
  out.write("games.tsv", tsv.str());
  out.write("rejects.tsv", rej.str());
  out.finish();
  log << "ingested " << games.size() << " games, " << rejects.size() << " rejects\n";
  return kExitOk;
}

int cmd_sessions(const RunConfig& cfg, std::ostream& log) {
  const auto records = load_games(existing_file(cfg, "games"));
  const auto groups = select_players(features::group_by_player(records), cfg.list("players"));
  const int gap = positive(cfg, "gap");
  std::vector<int> thresholds;
  for (const auto& t : cfg.list("thresholds")) {
    const auto v = io::parse_int(t);
    if (!v || *v < 1) throw UsageError("thresholds must be positive integers");
    thresholds.push_back(static_cast<int>(*v));
  }
  if (groups.empty()) throw UsageError("sessions: no games");

  std::vector<std::vector<features::SessionizedGame>> per_player;
  json players = json::object();
  std::string rows = "focal_id,game_id,start_time,session_id,index_in_session\n";
  for (const auto& g : groups) {
    per_player.push_back(features::segment_sessions(g.records, gap));
    players[g.player_id] = json::parse(features::session_stats_json(
        features::session_statistics(per_player.back(), thresholds)));
    for (const auto& s : per_player.back()) {
      rows += io::join_row({g.player_id, s.record.game_id, std::to_string(s.record.start_time),
                            std::to_string(s.session_id), std::to_string(s.index_in_session)});
    }
  }
  json stats = {{"gap_seconds", gap},
                {"pooled", json::parse(features::session_stats_json(features::session_statistics(per_player, thresholds)))},
                {"players", players}};
  OutputDir out(cfg);
  out.write("session_stats.json", stats.dump(2) + "\n");
  out.write("sessions.csv", rows);
  out.finish();
  log << "segmented " << records.size() << " games of " << groups.size() << " player(s)\n";
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& log) {
  const auto data = dataset_from_config(cfg, log);
  const auto scfg = sampler_config(cfg);
  const auto options = model_options(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto draws = fit::fit_model(data, scfg, options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto summary = diagnostics::summarize(draws);
  const double max_rhat = diagnostics::max_rhat(summary);
  const bool gate = cfg.boolean("gate");
  const bool converged = max_rhat <= validate::kRhatGate;

  double min_bulk = std::numeric_limits<double>::infinity(), min_tail = min_bulk;
  for (const auto& r : summary) {
    if (std::isfinite(r.ess_bulk)) min_bulk = std::min(min_bulk, r.ess_bulk);
    if (std::isfinite(r.ess_tail)) min_tail = std::min(min_tail, r.ess_tail);
  }

  OutputDir out(cfg);
  write_dataset(out, data, cfg.hash());
  write_draws(out, draws);
  out.write("summary.csv", diagnostics::summary_csv(summary));
  out.write("intervals.csv", intervals_csv(summary));
  out.write("effects.csv", effects_csv(draws, data));
  json convergence = {{"max_rhat", number(max_rhat)},
                      {"rhat_gate", validate::kRhatGate},
                      {"gate_enabled", gate},
                      {"converged", converged},
                      {"min_ess_bulk", number(min_bulk)},
                      {"min_ess_tail", number(min_tail)},
                      {"divergences", draws.divergence_count()},
                      {"warnings", draws.warnings}};
  out.write("convergence.json", convergence.dump(2) + "\n");
  std::vector<double> steps(draws.step_size.begin(), draws.step_size.end());
  json metadata = {{"config", cfg.values()},
                   {"config_hash", cfg.hash()},
                   {"seed", scfg.seed},
                   {"chains", scfg.chains},
                   {"warmup", scfg.warmup_iters},
                   {"samples", scfg.sampling_iters},
                   {"players", data.num_players()},
                   {"observations", data.observations.size()},
                   {"divergences", draws.divergence_count()},
                   {"step_size", steps},
                   {"kernel", std::string(kernels::isa_name(kernels::active_isa()))},
                   {"effects_contrast", "win probability at xtilde = 1 - xbar minus at xtilde = -xbar, "
                                        "other terms at log-odds 0"}};
  out.write("metadata.json", metadata.dump(2) + "\n");
  out.finish();
  // Wall-clock timing stays out of the manifest so reruns hash identically.
  io::write_file(out.root() / "timing.json", json({{"runtime_seconds", seconds}}).dump(2) + "\n");

  log << "fit " << data.num_players() << " player(s), " << data.observations.size() << " observations in "
      << seconds << " s; max R-hat " << max_rhat << ", " << draws.divergence_count() << " divergences\n";
  for (const auto& w : draws.warnings) log << "warning: " << w << "\n";
  if (gate && !converged) {
    log << "convergence gate failed: max R-hat " << max_rhat << " > " << validate::kRhatGate << "\n";
    return kExitConvergence;
  }
  return kExitOk;
}

int cmd_summarize(const RunConfig& cfg, std::ostream& log) {
  const auto draws = read_draws(existing_dir(cfg, "draws_dir"));
  const auto summary = diagnostics::summarize(draws);
  OutputDir out(cfg);
  out.write("summary.csv", diagnostics::summary_csv(summary));
  out.write("intervals.csv", intervals_csv(summary));
  out.finish();
  log << "summarized " << summary.size() << " parameters over " << draws.num_chains << " chain(s)\n";
  return kExitOk;
}

int cmd_ppc(const RunConfig& cfg, std::ostream& log) {
  const fs::path fit_dir = existing_dir(cfg, "fit_dir");
  const fs::path sidecar = fit_dir / "dataset.json";
  if (!fs::is_regular_file(sidecar)) throw MissingInput("ppc: " + sidecar.string() + " not found");
  const json side = json::parse(io::read_file(sidecar));
  const auto ids = side.at("player_ids").get<std::vector<std::string>>();
  const auto xbar = side.at("xbar").get<std::vector<double>>();
  const int n = side.at("n").get<int>();
  const std::string player = required(cfg, "player");
  const auto it = std::find_if(ids.begin(), ids.end(), [&](const std::string& id) { return ingest::same_user(id, player); });
  if (it == ids.end()) throw UsageError("ppc: player '" + player + "' was not part of the fit");
  const auto j = static_cast<std::size_t>(it - ids.begin());

  const auto records = load_games(existing_file(cfg, "games"));
  const auto groups = select_players(features::group_by_player(records), {player});
  const auto decisive = decisive_if(groups.front().records, cfg.boolean("drop_draws"));
  const auto holdout = static_cast<std::size_t>(positive(cfg, "holdout"));
  if (decisive.size() < holdout) throw UsageError("ppc: player has fewer decisive games than the holdout");

  validate::PPCInput input;
  input.player_index = j;
  input.xbar = xbar[j];
  input.n = n;
  input.holdout.assign(decisive.end() - static_cast<std::ptrdiff_t>(holdout), decisive.end());
  for (auto r = decisive.begin(); r != decisive.end() - static_cast<std::ptrdiff_t>(holdout); ++r) {
    input.history_won.push_back(r->outcome == ingest::Outcome::win ? 1 : 0);
  }
  validate::PPCConfig pc;
  pc.holdout_games = static_cast<int>(holdout);
  pc.replications = positive(cfg, "replications");
  pc.seed = cfg.seed();
  pc.opponent_rd = cfg.real("opponent_rd");
  pc.initial_rd = cfg.real("initial_rd");
  pc.glicko.tau = cfg.real("tau");

  const auto draws = read_draws(fit_dir);
  const auto result = validate::posterior_predictive_trajectories(draws, input, pc);
  OutputDir out(cfg);
  out.write("ppc_trajectories.csv", validate::ppc_wide_csv(result));
  out.write("ppc_summary.csv", validate::ppc_summary_csv(result));
  out.write("ppc.json", json({{"player", ids[j]},
                              {"replications", result.trajectories.size()},
                              {"skipped", result.skipped},
                              {"seed", pc.seed}})
                            .dump(2) + "\n");
  out.finish();
  log << "simulated " << result.trajectories.size() << " trajectories of " << holdout << " games ("
      << result.skipped << " draws skipped)\n";
  return kExitOk;
}

int cmd_permute(const RunConfig& cfg, std::ostream& log) {
  const auto data = dataset_from_config(cfg, log);
  const auto report = validate::permutation_test(data, positive(cfg, "replicates"), sampler_config(cfg),
                                                 sampler::derive_seed(cfg.seed(), 0x5045524dULL),
                                                 model_options(cfg));
  std::string intervals = "name,true_posterior_mean,lo66,hi66,lo95,hi95\n";
  for (const auto& r : report.results) {
    intervals += io::join_row({r.parameter, io::format_double(r.true_posterior_mean),
                               io::format_double(r.interval66.first), io::format_double(r.interval66.second),
                               io::format_double(r.interval95.first), io::format_double(r.interval95.second)});
  }
  OutputDir out(cfg);
  out.write("permutation_null.csv", validate::permutation_csv(report));
  out.write("permutation_summary.json", validate::permutation_json(report));
  out.write("permutation_intervals.csv", intervals);
  out.finish();
  log << report.replicates << " replicates, " << report.excluded << " excluded\n";
  return kExitOk;
}

validate::SyntheticSpec synthetic_spec(const RunConfig& cfg) {
  validate::SyntheticSpec spec;
  spec.num_players = static_cast<std::size_t>(positive(cfg, "players"));
  spec.games_per_player = static_cast<std::size_t>(positive(cfg, "games"));
  spec.truth.mu_beta = cfg.real("mu_beta");
  spec.truth.gamma1 = cfg.real("gamma1");
  spec.truth.gamma2 = cfg.real("gamma2");
  spec.truth.tau1 = cfg.real("tau1");
  spec.truth.tau2 = cfg.real("tau2");
  spec.truth.rho = cfg.real("rho");
  spec.truth.sigma = cfg.real("sigma");
  spec.truth.sigma_g1 = cfg.real("sigma_g1");
  spec.truth.sigma_g2 = cfg.real("sigma_g2");
  spec.n = positive(cfg, "n");
  spec.rating_diff_sd = cfg.real("rating_sd");
  spec.white_probability = cfg.real("white_prob");
  if (!(std::abs(spec.truth.rho) < 1.0)) throw UsageError("rho must lie in (-1, 1)");
  if (spec.truth.tau1 < 0.0 || spec.truth.tau2 < 0.0) throw UsageError("tau1 and tau2 must be non-negative");
  if (spec.white_probability < 0.0 || spec.white_probability > 1.0) throw UsageError("white_prob must lie in [0, 1]");
  return spec;
}

// Canonical records carrying a synthetic stream: sessions of eight games two
// minutes apart, an hour between sessions, focal rating fixed at 1500.
std::vector<ingest::GameRecord> synthetic_records(const features::Dataset& data) {
  std::vector<ingest::GameRecord> out;
  constexpr std::int64_t kStart = 1700000000;
  for (std::size_t j = 0; j < data.num_players(); ++j) {
    const auto& s = data.streams[j];
    for (std::size_t i = 0; i < s.size(); ++i) {
      ingest::GameRecord r;
      r.game_id = "syn-" + std::to_string(j + 1) + "-" + std::to_string(i + 1);
      r.start_time = kStart + static_cast<std::int64_t>(i) * 120 + static_cast<std::int64_t>(i / 8) * 3600;
      r.base_seconds = 60;
      r.increment_seconds = 0;
      r.rated = true;
      r.focal_id = data.player_ids[j];
      r.focal_color = s.white[i] > 0.5 ? ingest::Color::white : ingest::Color::black;
      r.focal_rating = 1500.0;
      r.opponent_rating = 1500.0 - s.rating_diff[i];
      r.outcome = s.won[i] ? ingest::Outcome::win : ingest::Outcome::loss;
      r.termination = ingest::Termination::normal;
      out.push_back(std::move(r));
    }
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  auto spec = synthetic_spec(cfg);
  spec.seed = cfg.seed();
  const auto sim = validate::simulate_synthetic(spec);
  const auto names = model::parameter_names(spec.num_players);
  const auto values = model::flatten(sim.truth);
  json truth = json::object();
  std::string truth_rows = "name,value\n";
  for (std::size_t p = 0; p < names.size(); ++p) {
    truth[names[p]] = values[p];
    truth_rows += io::join_row({names[p], io::format_double(values[p])});
  }
  OutputDir out(cfg);
  std::ostringstream tsv;
  ingest::write_canonical(tsv, synthetic_records(sim.dataset));
  out.write("games.tsv", tsv.str());
  write_dataset(out, sim.dataset, cfg.hash());
  out.write("truth.json", json({{"seed", spec.seed}, {"redraws", sim.redraws}, {"parameters", truth}}).dump(2) + "\n");
  out.write("truth.csv", truth_rows);
  out.finish();
  log << "simulated " << spec.num_players << " players x " << spec.games_per_player << " games\n";
  return kExitOk;
}

int cmd_recover(const RunConfig& cfg, std::ostream& log) {
  const auto base = synthetic_spec(cfg);
  const auto scfg = sampler_config(cfg);
  const auto options = model_options(cfg);
  const int seeds = positive(cfg, "seeds");
  const long long first = cfg.integer("first_seed");
  std::vector<validate::RecoveryReport> reports;
  for (int k = 0; k < seeds; ++k) {
    auto spec = base;
    spec.seed = static_cast<std::uint64_t>(first + k);
    auto fit_cfg = scfg;
    fit_cfg.seed = sampler::derive_seed(scfg.seed, spec.seed);
    reports.push_back(validate::parameter_recovery(spec, fit_cfg, options));
    log << "seed " << spec.seed << ": max R-hat " << reports.back().max_rhat << "\n";
  }
  std::string coverage = "name,covered,replications\n";
  for (std::size_t p = 0; p < reports.front().rows.size(); ++p) {
    int covered = 0;
    for (const auto& r : reports) covered += r.rows[p].covered ? 1 : 0;
    coverage += io::join_row({reports.front().rows[p].name, std::to_string(covered), std::to_string(reports.size())});
  }
  OutputDir out(cfg);
  out.write("recovery.json", validate::recovery_json(reports));
  out.write("recovery.csv", validate::recovery_csv(reports));
  out.write("coverage.csv", coverage);
  out.finish();
  return kExitOk;
}

int cmd_sbc(const RunConfig& cfg, std::ostream& log) {
  validate::SbcConfig sc;
  sc.replications = static_cast<std::size_t>(positive(cfg, "replications"));
  sc.thinned_draws = static_cast<std::size_t>(positive(cfg, "thinned"));
  sc.bins = static_cast<std::size_t>(positive(cfg, "bins"));
  sc.negative_control = cfg.boolean("negative_control");
  sc.seed = cfg.seed();
  validate::SyntheticSpec spec;
  spec.num_players = static_cast<std::size_t>(positive(cfg, "players"));
  spec.games_per_player = static_cast<std::size_t>(positive(cfg, "games"));
  spec.n = positive(cfg, "n");
  spec.rating_diff_sd = cfg.real("rating_sd");
  spec.white_probability = cfg.real("white_prob");
  auto scfg = sampler_config(cfg);
  const auto report = validate::sbc_ranks(sc, spec, scfg, model_options(cfg));
  std::string hist = "parameter,bin,count\n";
  for (const auto& p : report.parameters) {
    for (std::size_t b = 0; b < p.histogram.size(); ++b) {
      hist += io::join_row({p.name, std::to_string(b + 1), std::to_string(p.histogram[b])});
    }
    log << p.name << ": chi-square " << p.chi_square << ", p = " << p.p_value << "\n";
  }
  OutputDir out(cfg);
  out.write("sbc.json", validate::sbc_json(report));
  out.write("sbc_ranks.csv", validate::sbc_csv(report));
  out.write("sbc_histogram.csv", hist);
  out.finish();
  return kExitOk;
}

}  // namespace

int run_command(const RunConfig& config, std::ostream& log) {
  const std::string& c = config.command();
  if (c == "fetch") return cmd_fetch(config, log);
  if (c == "ingest") return cmd_ingest(config, log);
  if (c == "sessions") return cmd_sessions(config, log);
  if (c == "fit") return cmd_fit(config, log);
  if (c == "summarize") return cmd_summarize(config, log);
  if (c == "ppc") return cmd_ppc(config, log);
  if (c == "permute") return cmd_permute(config, log);
  if (c == "simulate") return cmd_simulate(config, log);
  if (c == "recover") return cmd_recover(config, log);
  if (c == "sbc") return cmd_sbc(config, log);
  throw UsageError("unknown subcommand '" + c + "'");
}

}  // namespace momentum::cli
