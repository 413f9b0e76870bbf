#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "momentum/diagnostics.hpp"
#include "momentum/io.hpp"
#include "momentum/validate.hpp"

namespace momentum::validate {

PPCResult posterior_predictive_trajectories(const sampler::PosteriorDraws& draws, const PPCInput& input,
                                            const PPCConfig& config) {
  if (input.n < 1) throw std::invalid_argument("posterior_predictive_trajectories: n must be >= 1");
  if (input.holdout.empty()) throw std::invalid_argument("posterior_predictive_trajectories: empty holdout");
  if (config.replications < 1) throw std::invalid_argument("posterior_predictive_trajectories: no replications");
  const std::size_t total = draws.num_chains * draws.num_iterations;
  if (total == 0) throw std::invalid_argument("posterior_predictive_trajectories: no draws");

  const std::string suffix = "[" + std::to_string(input.player_index + 1) + "]";
  const std::size_t col_alpha = draws.index_of("alpha" + suffix);
  const std::size_t col_beta = draws.index_of("beta" + suffix);
  const std::size_t col_g1 = draws.index_of("gamma1");
  const std::size_t col_g2 = draws.index_of("gamma2");

  const std::size_t G = input.holdout.size();
  const auto window = static_cast<std::size_t>(input.n);
  // Window seeded with the most recent decisive outcomes before the holdout;
  // missing history counts as losses.
  std::vector<std::uint8_t> seed_window(window, 0);
  const std::size_t have = std::min(window, input.history_won.size());
  std::copy(input.history_won.end() - static_cast<std::ptrdiff_t>(have), input.history_won.end(),
            seed_window.end() - static_cast<std::ptrdiff_t>(have));

  const glicko::GlickoState initial{input.holdout.front().focal_rating, config.initial_rd, 0.06};
  std::vector<glicko::GameResult> games(G);
  for (std::size_t i = 0; i < G; ++i) games[i] = {input.holdout[i].opponent_rating, config.opponent_rd, 0.0};

  PPCResult result;
  std::vector<std::uint8_t> ring;
  for (int r = 0; r < config.replications; ++r) {
    const std::size_t d = static_cast<std::size_t>(r) % total;
    const std::size_t chain = d / draws.num_iterations;
    const std::size_t iter = d % draws.num_iterations;
    const double alpha = draws.at(chain, iter, col_alpha);
    const double beta = draws.at(chain, iter, col_beta);
    const double g1 = draws.at(chain, iter, col_g1);
    const double g2 = draws.at(chain, iter, col_g2);
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(g1) || !std::isfinite(g2)) {
      ++result.skipped;
      continue;
    }

    std::mt19937_64 rng(sampler::derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ring = seed_window;
    int recent = static_cast<int>(std::count(ring.begin(), ring.end(), std::uint8_t{1}));
    for (std::size_t i = 0; i < G; ++i) {
      const auto& g = input.holdout[i];
      const double x = static_cast<double>(recent) / input.n;
      const double white = g.focal_color == ingest::Color::white ? 1.0 : 0.0;
      const double eta =
          alpha + beta * (x - input.xbar) + g1 * white + g2 * (g.focal_rating - g.opponent_rating);
      const std::uint8_t won = unif(rng) < model::logistic(eta) ? 1 : 0;
      games[i].score = won;
      recent += won - ring[i % window];
      ring[i % window] = won;
    }
    const auto states = glicko::replay_ratings(initial, games, config.glicko);
    std::vector<double> ratings(G);
    for (std::size_t i = 0; i < G; ++i) ratings[i] = states[i].rating;
    result.trajectories.push_back(std::move(ratings));
  }

  result.mean.assign(G, 0.0);
  result.q2_5.assign(G, std::nan(""));
  result.q97_5.assign(G, std::nan(""));
  if (!result.trajectories.empty()) {
    std::vector<double> column(result.trajectories.size());
    for (std::size_t i = 0; i < G; ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < column.size(); ++k) {
        column[k] = result.trajectories[k][i];
        sum += column[k];
      }
      result.mean[i] = sum / static_cast<double>(column.size());
      std::sort(column.begin(), column.end());
      result.q2_5[i] = diagnostics::quantile_sorted(column, 0.025);
      result.q97_5[i] = diagnostics::quantile_sorted(column, 0.975);
    }
  }
  result.observed.resize(G);
  for (std::size_t i = 0; i + 1 < G; ++i) result.observed[i] = input.holdout[i + 1].focal_rating;
  return result;
}

std::string ppc_wide_csv(const PPCResult& result) {
  const std::size_t G = result.mean.size();
  std::vector<std::string> header{"replication"};
  for (std::size_t i = 0; i < G; ++i) header.push_back("game" + std::to_string(i + 1));
  std::string out = io::join_row(header);
  for (std::size_t r = 0; r < result.trajectories.size(); ++r) {
    std::vector<std::string> cells{std::to_string(r + 1)};
    for (double v : result.trajectories[r]) cells.push_back(io::format_double(v));
    out += io::join_row(cells);
  }
  return out;
}

std::string ppc_summary_csv(const PPCResult& result) {
  std::string out = "game_index,mean,q2.5,q97.5,observed\n";
  for (std::size_t i = 0; i < result.mean.size(); ++i) {
    out += io::join_row({std::to_string(i + 1), io::format_double(result.mean[i]), io::format_double(result.q2_5[i]),
                         io::format_double(result.q97_5[i]),
                         result.observed[i] ? io::format_double(*result.observed[i]) : "NA"});
  }
  return out;
}

}  // namespace momentum::validate
