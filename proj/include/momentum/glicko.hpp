#pragma once

// Glicko-2 rating updates, one game per rating period.

#include <string>
#include <vector>

namespace momentum::glicko {

struct GlickoState {
  double rating = 1500.0;
  double rd = 350.0;
  double volatility = 0.06;
};

struct GlickoConfig {
  double tau = 0.5;
  double scale = 173.7178;
  double offset = 1500.0;
  double convergence_tol = 1e-6;
  int max_iterations = 100;
};

struct GameResult {
  double opp_rating = 1500.0;
  double opp_rd = 350.0;
  double score = 0.0;  // 1 win, 0.5 draw, 0 loss
};

/// Default deviation assumed for opponents whose rd is not exported.
inline constexpr double kDefaultOpponentRd = 45.0;

/// One rating period. With no results only the deviation grows.
/// Throws std::runtime_error if the volatility root cannot be bracketed.
GlickoState glicko2_update(const GlickoState& state, const std::vector<GameResult>& results,
                           const GlickoConfig& config = {});

/// Applies one update per game and returns the state after each game.
std::vector<GlickoState> replay_ratings(const GlickoState& initial, const std::vector<GameResult>& games,
                                        const GlickoConfig& config = {});

/// CSV `game_index,rating,rd,volatility`, game_index starting at 1.
std::string trajectory_csv(const std::vector<GlickoState>& states);

}  // namespace momentum::glicko
