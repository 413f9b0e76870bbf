// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                      run every criterion
//   acceptance --criterion <name>   run one criterion
//   acceptance --list               print the criterion names

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "cli_config.hpp"
#include "commands.hpp"
#include "momentum/diagnostics.hpp"
#include "momentum/features.hpp"
#include "momentum/fit.hpp"
#include "momentum/glicko.hpp"
#include "momentum/io.hpp"
#include "momentum/model.hpp"
#include "momentum/sampler.hpp"
#include "momentum/validate.hpp"
#include "model_fixtures.hpp"
#include "targets.hpp"

using namespace momentum;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

void progress(const std::string& text) { std::cerr << "  " << text << std::endl; }

// ---------------------------------------------------------------------------

Outcome transform_fidelity() {
  struct Case {
    double eta, expected, reported;
  };
  const Case cases[] = {{0.25, 0.5622, 0.56}, {0.091, 0.5227, 0.52}, {0.0053 * 100, 0.6295, 0.63},
                        {0.0037 * 100, 0.5915, 0.59}};
  Outcome out{true, ""};
  for (const auto& c : cases) {
    const double p = model::logistic(c.eta);
    const bool ok = std::abs(p - c.reported) <= 0.005 && std::abs(p - c.expected) <= 5e-5;
    out.pass = out.pass && ok;
    out.detail += "logistic(" + fmt(c.eta) + ")=" + fmt(p, 6) + " ";
  }
  return out;
}

Outcome gradient_correctness() {
  const auto data = test::gradient_check_dataset();
  const model::LogPosterior lp(data);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    std::vector<double> u(lp.dim()), g(lp.dim());
    for (auto& v : u) v = unif(rng);
    lp(u, g);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double h = 1e-5, keep = u[i];
      u[i] = keep + h;
      const double up = lp.value(u);
      u[i] = keep - h;
      const double down = lp.value(u);
      u[i] = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return {data.observations.size() == 50 && worst <= 1e-6,
          "J=3, " + std::to_string(data.observations.size()) + " obs, 100 points, max rel err " + fmt(worst, 3)};
}

struct ChainCheck {
  bool pass = true;
  double max_rhat = 0.0;
  double min_ess = 1e300;
};

ChainCheck convergence(const sampler::PosteriorDraws& d) {
  ChainCheck c;
  for (std::size_t p = 0; p < d.num_params(); ++p) {
    const auto chains = d.parameter(p);
    const double rhat = diagnostics::split_rhat(chains);
    const double ess = diagnostics::effective_sample_size(chains).bulk;
    c.max_rhat = std::max(c.max_rhat, rhat);
    c.min_ess = std::min(c.min_ess, ess);
    c.pass = c.pass && rhat <= 1.01 && ess >= 400.0;
  }
  return c;
}

Outcome sampler_calibration() {
  sampler::SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup_iters = 1000;
  cfg.sampling_iters = 1000;
  cfg.seed = 11;

  const auto normal = sampler::sample(test::standard_normal(5), cfg);
  auto check = convergence(normal);
  bool moments = true;
  double worst_z = 0.0, worst_var = 0.0;
  for (std::size_t p = 0; p < 5; ++p) {
    const auto x = normal.pooled(p);
    const double ess = diagnostics::effective_sample_size(normal.parameter(p)).bulk;
    const double sd = std::sqrt(test::variance(x));
    const double z = std::abs(test::mean(x)) / (sd / std::sqrt(ess));
    const double var_err = std::abs(test::variance(x) - 1.0);
    worst_z = std::max(worst_z, z);
    worst_var = std::max(worst_var, var_err);
    moments = moments && z <= 3.0 && var_err <= 0.1;
  }

  cfg.seed = 12;
  const auto corr = sampler::sample(test::correlated_normal(0.9), cfg);
  const auto check2 = convergence(corr);
  const double r = test::correlation(corr.pooled(0), corr.pooled(1));
  for (std::size_t p = 0; p < 2; ++p) {
    const double var_err = std::abs(test::variance(corr.pooled(p)) - 1.0);
    worst_var = std::max(worst_var, var_err);
    moments = moments && var_err <= 0.1;
  }
  moments = moments && std::abs(r - 0.9) <= 0.05;
  return {check.pass && check2.pass && moments,
          "normal5 max |mean|/MCSE " + fmt(worst_z, 3) + ", max |var-1| " + fmt(worst_var, 3) + "; rho " + fmt(r) +
              "; max R-hat " + fmt(std::max(check.max_rhat, check2.max_rhat), 5) + ", min ESS_bulk " +
              fmt(std::min(check.min_ess, check2.min_ess), 5)};
}

model::ModelParams recovery_truth() {
  model::ModelParams t;
  t.mu_beta = 0.3;
  t.gamma1 = 0.25;
  t.gamma2 = 0.005;
  t.tau1 = 0.3;
  t.tau2 = 0.3;
  t.rho = 0.2;
  return t;
}

sampler::SamplerConfig full_budget(std::uint64_t seed) {
  sampler::SamplerConfig cfg;
  cfg.seed = seed;
  return cfg;
}

Outcome parameter_recovery() {
  const std::vector<std::string> named = {"mu_beta", "gamma1", "gamma2", "tau1", "tau2", "rho"};
  std::vector<int> covered(named.size(), 0);
  bool first_all = false;
  std::size_t flagged = 0;
  std::string first_missed;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    validate::SyntheticSpec spec;
    spec.num_players = 20;
    spec.games_per_player = 2000;
    spec.truth = recovery_truth();
    spec.seed = static_cast<std::uint64_t>(s);
    const auto report = validate::parameter_recovery(spec, full_budget(1000 + s));
    flagged += report.flagged;
    bool all = true;
    for (std::size_t k = 0; k < named.size(); ++k) {
      const bool c = report.row(named[k]).covered;
      covered[k] += c;
      all = all && c;
      if (s == 1 && !c) first_missed += named[k] + " ";
    }
    if (s == 1) first_all = all;
    progress("recovery seed " + std::to_string(s) + ": max R-hat " + fmt(report.max_rhat, 5) + ", " +
             std::to_string(report.divergences) + " divergences, named all covered " + (all ? "yes" : "no"));
  }
  Outcome out{first_all, "seed 1 all named intervals cover: " + std::string(first_all ? "yes" : "no (" + first_missed + ")") + "; coverage"};
  for (std::size_t k = 0; k < named.size(); ++k) {
    out.pass = out.pass && covered[k] >= 17;
    out.detail += " " + named[k] + " " + std::to_string(covered[k]) + "/20";
  }
  out.detail += "; R-hat flagged fits " + std::to_string(flagged);
  return out;
}

Outcome null_calibration() {
  int ok = 0;
  double worst = 0.0;
  for (int s = 1; s <= 20; ++s) {
    validate::SyntheticSpec spec;
    spec.num_players = 20;
    spec.games_per_player = 2000;
    spec.truth = recovery_truth();
    spec.truth.mu_beta = 0.0;
    spec.truth.tau2 = 0.0;
    spec.seed = static_cast<std::uint64_t>(100 + s);
    const auto report = validate::parameter_recovery(spec, full_budget(2000 + s));
    const auto& mu = report.row("mu_beta");
    const bool good = std::abs(mu.mean) <= 0.05 && mu.q2_5 <= 0.0 && 0.0 <= mu.q97_5;
    ok += good;
    worst = std::max(worst, std::abs(mu.mean));
    progress("null seed " + std::to_string(s) + ": mean mu_beta " + fmt(mu.mean) + " [" + fmt(mu.q2_5) + ", " +
             fmt(mu.q97_5) + "], max R-hat " + fmt(report.max_rhat, 5) + ", " + std::to_string(report.divergences) +
             " divergences");
  }
  return {ok >= 18, std::to_string(ok) + "/20 seeds with |mean| <= 0.05 and 0 in the 95% interval; max |mean| " +
                        fmt(worst, 3)};
}

Outcome sbc() {
  validate::SbcConfig cfg;
  cfg.replications = 100;
  cfg.thinned_draws = 63;
  cfg.seed = 7;
  validate::SyntheticSpec spec;
  spec.num_players = 8;
  spec.games_per_player = 300;
  sampler::SamplerConfig fit_cfg;
  fit_cfg.warmup_iters = 500;
  fit_cfg.sampling_iters = 500;

  const auto good = validate::sbc_ranks(cfg, spec, fit_cfg);
  Outcome out{true, ""};
  for (const auto& p : good.parameters) {
    out.pass = out.pass && p.p_value > 0.01;
    out.detail += p.name + " p=" + fmt(p.p_value, 3) + " ";
  }
  out.detail += "(" + std::to_string(good.replications) + " fits, " + std::to_string(good.failed) + " failed); ";
  progress("sbc well-specified done: " + out.detail);

  cfg.negative_control = true;
  const auto broken = validate::sbc_ranks(cfg, spec, fit_cfg);
  const auto& mu = broken.parameters.front();
  out.pass = out.pass && mu.name == "mu_beta" && mu.p_value < 0.01;
  out.detail += "sign-flipped control mu_beta p=" + fmt(mu.p_value, 3);
  return out;
}

Outcome glicko_oracle() {
  const std::vector<glicko::GameResult> games = {{1400, 30, 1}, {1550, 100, 0}, {1700, 300, 0}};
  const auto s = glicko::glicko2_update({1500, 200, 0.06}, games);
  // Step sequence executed independently in double precision.
  const double oracle_rating = 1464.0506705393013, oracle_rd = 151.51652412385727;
  const bool pass = std::abs(s.rating - oracle_rating) <= 0.01 && std::abs(s.rd - oracle_rd) <= 0.01 &&
                    std::abs(s.rating - 1464.05) <= 0.01 && std::abs(s.rd - 151.52) <= 0.01;
  return {pass, "rating " + fmt(s.rating, 10) + ", rd " + fmt(s.rd, 9) + ", volatility " + fmt(s.volatility, 8)};
}

Outcome permutation_sanity() {
  validate::SyntheticSpec spec;
  spec.num_players = 10;
  spec.games_per_player = 1000;
  spec.truth = recovery_truth();
  spec.truth.mu_beta = 0.0;
  spec.truth.tau2 = 0.0;
  spec.seed = 31;
  const auto data = validate::simulate_synthetic(spec).dataset;
  const auto report = validate::permutation_test(data, 50, validate::reduced_budget(32), 33);
  std::size_t inside = 0, total = 0;
  for (const auto& r : report.results) {
    if (r.parameter != "mu_beta" && r.parameter.rfind("beta[", 0) != 0) continue;
    ++total;
    inside += !r.null_means.empty() && r.interval95.first <= r.true_posterior_mean &&
              r.true_posterior_mean <= r.interval95.second;
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(total);
  return {frac >= 0.9, std::to_string(inside) + "/" + std::to_string(total) +
                           " of mu_beta and beta_j inside their null 95% intervals; " +
                           std::to_string(report.excluded) + "/50 replicates excluded"};
}

Outcome feature_oracle() {
  std::mt19937_64 rng(41);
  bool pass = true;
  std::size_t compared = 0;
  for (int n : {1, 5, 10}) {
    std::bernoulli_distribution coin(0.5);
    std::vector<std::uint8_t> won(10000);
    for (auto& w : won) w = coin(rng) ? 1 : 0;
    const auto hist = features::compute_win_history(won, n);
    for (std::size_t i = 0; i < won.size(); ++i) {
      if (i < static_cast<std::size_t>(n)) {
        pass = pass && !hist[i];
        continue;
      }
      int wins = 0;
      for (std::size_t k = i - n; k < i; ++k) wins += won[k];
      pass = pass && hist[i] && *hist[i] == static_cast<double>(wins) / n;
      ++compared;
    }

    // Observation-level x~ against the recount minus the recounted mean.
    features::PlayerStream stream;
    stream.won = won;
    stream.white.assign(won.size(), 0.0);
    stream.rating_diff.assign(won.size(), 0.0);
    const auto data = features::dataset_from_streams({stream}, {"p"}, n);
    const double xbar = static_cast<double>(std::accumulate(won.begin(), won.end(), 0)) / won.size();
    pass = pass && data.xbar[0] == xbar && data.observations.size() == won.size() - n;
    for (std::size_t k = 0; k < data.observations.size(); ++k) {
      pass = pass && data.observations[k].xtilde == *hist[k + n] - xbar && data.observations[k].y == won[k + n];
    }
  }

  std::uniform_int_distribution<int> short_gap(1, 400), long_gap(401, 20000);
  std::bernoulli_distribution breaks(0.15);
  for (int gap : {features::kBulletGapSeconds, features::kBlitzGapSeconds}) {
    std::vector<ingest::GameRecord> games(10000);
    std::int64_t t = 1700000000;
    for (auto& g : games) {
      t += breaks(rng) ? long_gap(rng) : short_gap(rng);
      g.start_time = t;
    }
    const auto seg = features::segment_sessions(games, gap);
    int sessions = 0;
    for (std::size_t i = 0; i < games.size(); ++i) {
      int id = 0;
      for (std::size_t k = 1; k <= i; ++k) id += games[k].start_time - games[k - 1].start_time > gap;
      std::size_t first = i;
      while (first > 0 && games[first].start_time - games[first - 1].start_time <= gap) --first;
      pass = pass && seg[i].session_id == id && seg[i].index_in_session == static_cast<int>(i - first);
      sessions = id + 1;
    }
    pass = pass && features::session_statistics(seg).total_sessions == sessions;
  }
  return {pass, std::to_string(compared) + " window values and 20000 session labels compared"};
}

Outcome determinism() {
  // Both runs use the same paths so that resolved configurations match too.
  const fs::path dir = fs::temp_directory_path() / "momentum_acceptance_determinism";
  auto pipeline = [&] {
    fs::remove_all(dir);
    std::ostringstream log;
    auto run = [&](const std::string& cmd, std::map<std::string, std::string> o) {
      return cli::run_command(cli::resolve(cmd, nullptr, o, std::nullopt), log);
    };
    run("simulate", {{"players", "6"}, {"games", "400"}, {"seed", "5"}, {"output_dir", (dir / "sim").string()}});
    run("fit", {{"games", (dir / "sim" / "games.tsv").string()},
                {"seed", "6"},
                {"gate", "false"},
                {"output_dir", (dir / "fit").string()}});
    run("summarize", {{"draws_dir", (dir / "fit").string()}, {"output_dir", (dir / "summary").string()}});
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = io::read_file(entry.path());
    }
    return files;
  };
  auto first = pipeline();
  auto second = pipeline();
  // timing.json holds wall-clock runtime; everything else must match.
  const std::vector<std::string> required = {"fit/draws/chain_1.csv", "fit/draws/chain_4.csv", "fit/summary.csv",
                                             "summary/summary.csv", "summary/intervals.csv"};
  bool same = first.size() == second.size() &&
              std::all_of(required.begin(), required.end(), [&](const std::string& f) { return first.count(f) > 0; });
  std::size_t compared = 0;
  std::string differing;
  for (const auto& [path, contents] : first) {
    if (fs::path(path).filename() == "timing.json") continue;
    ++compared;
    if (second[path] != contents) {
      same = false;
      differing += " " + path;
    }
  }
  return {same, std::to_string(compared) + " files byte-identical across two simulate/fit/summarize runs" +
                    (differing.empty() ? "" : "; differing:" + differing)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
      {"transform_fidelity", transform_fidelity}, {"gradient_correctness", gradient_correctness},
      {"sampler_calibration", sampler_calibration}, {"parameter_recovery", parameter_recovery},
      {"null_calibration", null_calibration},     {"sbc", sbc},
      {"glicko_oracle", glicko_oracle},           {"permutation_sanity", permutation_sanity},
      {"feature_oracle", feature_oracle},         {"determinism", determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"momentum acceptance suite"};
  std::string only;
  bool list = false;
  app.add_option("--criterion", only, "run a single criterion");
  app.add_flag("--list", list, "print criterion names");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& [name, fn] : criteria()) std::cout << name << "\n";
    return 0;
  }
  int failures = 0, ran = 0;
  for (const auto& [name, fn] : criteria()) {
    if (!only.empty() && name != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << " (" << fmt(secs, 3) << " s)"
              << std::endl;
    failures += !r.pass;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
