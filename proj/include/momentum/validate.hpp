#pragma once

// Synthetic data, parameter recovery, simulation-based calibration,
// permutation tests and posterior-predictive rating trajectories.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "momentum/features.hpp"
#include "momentum/glicko.hpp"
#include "momentum/ingest.hpp"
#include "momentum/model.hpp"
#include "momentum/sampler.hpp"

namespace momentum::validate {

using features::Dataset;

struct SyntheticSpec {
  std::size_t num_players = 20;
  std::size_t games_per_player = 2000;
  /// Hyperparameters. When truth.alpha/beta are empty the player effects are
  /// drawn from N((0, mu_beta), diag(tau) Omega diag(tau)); tau2 = 0 makes
  /// every beta_j equal mu_beta.
  model::ModelParams truth;
  double white_probability = 0.5;
  double rating_diff_sd = 50.0;
  int n = 1;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Dataset dataset;
  model::ModelParams truth;  // alpha and beta filled in
  /// xtilde used by the generator for each likelihood observation, in
  /// dataset order.
  std::vector<double> generator_xtilde;
  /// Fixed-point restarts needed to make xbar consistent with the outcomes.
  int redraws = 0;
};

/// Simulates outcomes game by game so that every history, xbar and xtilde
/// agrees with the emitted outcomes. The first n games of each player carry
/// no history term.
SyntheticData simulate_synthetic(const SyntheticSpec& spec);

/// Draws every hyperparameter from its prior: half-normal scales, LKJ(2)
/// correlation, normal mu_beta and gammas.
model::ModelParams draw_from_prior(std::mt19937_64& rng, const model::ModelOptions& options = {});

struct RecoveryRow {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double q2_5 = 0.0;
  double q97_5 = 0.0;
  bool covered = false;
  double rhat = 0.0;
  double ess_bulk = 0.0;
};

struct RecoveryReport {
  std::uint64_t seed = 0;
  std::vector<RecoveryRow> rows;  // model::parameter_names order
  double max_rhat = 0.0;
  std::size_t divergences = 0;
  bool flagged = false;  // max R-hat above the gate
  std::vector<std::string> warnings;

  const RecoveryRow& row(const std::string& name) const;
};

inline constexpr double kRhatGate = 1.01;

RecoveryReport parameter_recovery(const SyntheticSpec& spec, const sampler::SamplerConfig& fit_config,
                                  const model::ModelOptions& options = {});

std::string recovery_json(const std::vector<RecoveryReport>& reports);
/// Long format: seed,name,truth,mean,q2.5,q97.5,covered,rhat,ess_bulk.
std::string recovery_csv(const std::vector<RecoveryReport>& reports);

struct SbcConfig {
  std::size_t replications = 100;
  std::size_t thinned_draws = 63;
  std::size_t bins = 8;
  std::vector<std::string> parameters = {"mu_beta", "gamma1", "gamma2"};
  std::uint64_t seed = 1;
  /// Fits with -xtilde while simulating with +xtilde.
  bool negative_control = false;
};

struct SbcParameter {
  std::string name;
  std::vector<int> ranks;       // one per retained replication, in [0, thinned_draws]
  std::vector<int> histogram;   // bins over the rank range
  double chi_square = 0.0;
  double p_value = 0.0;
};

struct SbcReport {
  std::vector<SbcParameter> parameters;
  std::size_t replications = 0;
  std::size_t failed = 0;  // excluded fits
  std::size_t thinned_draws = 0;
};

/// `template_spec` fixes sizes, covariate laws and n; hyperparameters and
/// effects are drawn from the prior for every replication.
SbcReport sbc_ranks(const SbcConfig& config, const SyntheticSpec& template_spec,
                    const sampler::SamplerConfig& fit_config, const model::ModelOptions& options = {});

/// Bins ranks in [0, max_rank] into `bins` equal-width bins and returns the
/// Pearson statistic with its chi-square(bins - 1) upper-tail p-value.
std::pair<double, double> rank_uniformity(const std::vector<int>& ranks, int max_rank, std::size_t bins,
                                          std::vector<int>* histogram = nullptr);

std::string sbc_json(const SbcReport& report);
/// Long format: parameter,replication,rank.
std::string sbc_csv(const SbcReport& report);

struct PermutationResult {
  std::string parameter;
  double true_posterior_mean = 0.0;
  std::vector<double> null_means;  // retained replicates only
  std::pair<double, double> interval66;
  std::pair<double, double> interval95;
};

struct PermutationReport {
  std::vector<PermutationResult> results;  // model::parameter_names order
  std::size_t replicates = 0;
  std::size_t excluded = 0;
  std::uint64_t seed = 0;
};

/// Replicate R-hat above this excludes it from the null distribution.
inline constexpr double kReplicateRhatGate = 1.05;

/// Reduced budget used for permutation refits.
sampler::SamplerConfig reduced_budget(std::uint64_t seed);

/// Shuffles outcomes within each player's stream, leaving colors and rating
/// differences in place, and rebuilds histories and xbar.
Dataset permute_outcomes(const Dataset& data, std::mt19937_64& rng);

PermutationReport permutation_test(const Dataset& data, int replicates, const sampler::SamplerConfig& fit_config,
                                   std::uint64_t seed, const model::ModelOptions& options = {});

/// Null means, one row per retained replicate, one column per parameter.
std::string permutation_csv(const PermutationReport& report);
std::string permutation_json(const PermutationReport& report);

struct PPCConfig {
  int holdout_games = 1000;
  int history_games = 1000;
  int replications = 4000;
  std::uint64_t seed = 1;
  double opponent_rd = glicko::kDefaultOpponentRd;
  double initial_rd = glicko::kDefaultOpponentRd;
  glicko::GlickoConfig glicko;
};

struct PPCInput {
  std::size_t player_index = 0;                // column block in the draws
  std::vector<ingest::GameRecord> holdout;     // decisive games, chronological
  std::vector<std::uint8_t> history_won;       // outcomes just before the holdout
  double xbar = 0.5;
  int n = 1;
};

struct PPCResult {
  std::vector<std::vector<double>> trajectories;  // replications x holdout games
  std::vector<double> mean, q2_5, q97_5;
  std::vector<std::optional<double>> observed;  // rating after each game, when known
  std::size_t skipped = 0;
};

/// For each posterior draw, simulates the holdout sequentially with the
/// history window fed by simulated outcomes, then replays the simulated
/// results through Glicko-2 starting from the first game's pre-game rating.
PPCResult posterior_predictive_trajectories(const sampler::PosteriorDraws& draws, const PPCInput& input,
                                            const PPCConfig& config);

/// Wide CSV: replication then one column per holdout game.
std::string ppc_wide_csv(const PPCResult& result);
/// game_index,mean,q2.5,q97.5,observed
std::string ppc_summary_csv(const PPCResult& result);

}  // namespace momentum::validate
