#include "momentum/glicko.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "momentum/io.hpp"

namespace momentum::glicko {

namespace {

double g(double phi) noexcept { return 1.0 / std::sqrt(1.0 + 3.0 * phi * phi / (std::numbers::pi * std::numbers::pi)); }

std::string dump(const GlickoState& s, double delta, double v) {
  std::ostringstream out;
  out << "rating=" << s.rating << " rd=" << s.rd << " volatility=" << s.volatility << " delta=" << delta
      << " v=" << v;
  return out.str();
}

}  // namespace

GlickoState glicko2_update(const GlickoState& state, const std::vector<GameResult>& results,
                           const GlickoConfig& config) {
  const double mu = (state.rating - config.offset) / config.scale;
  const double phi = state.rd / config.scale;
  const double sigma = state.volatility;

  if (results.empty()) {
    return {state.rating, std::sqrt(phi * phi + sigma * sigma) * config.scale, sigma};
  }

  double v_inv = 0.0;
  double score_sum = 0.0;
  for (const auto& r : results) {
    const double mu_j = (r.opp_rating - config.offset) / config.scale;
    const double g_j = g(r.opp_rd / config.scale);
    const double e = 1.0 / (1.0 + std::exp(-g_j * (mu - mu_j)));
    v_inv += g_j * g_j * e * (1.0 - e);
    score_sum += g_j * (r.score - e);
  }
  const double v = 1.0 / v_inv;
  const double delta = v * score_sum;

  // Volatility: root of f by the Illinois variant of regula falsi.
  const double tau2 = config.tau * config.tau;
  const double a = std::log(sigma * sigma);
  const double phi2 = phi * phi;
  const auto f = [&](double x) {
    const double ex = std::exp(x);
    const double d = phi2 + v + ex;
    return ex * (delta * delta - phi2 - v - ex) / (2.0 * d * d) - (x - a) / tau2;
  };

  double A = a;
  double B = 0.0;
  if (delta * delta > phi2 + v) {
    B = std::log(delta * delta - phi2 - v);
  } else {
    int k = 1;
    while (f(a - k * config.tau) < 0.0) {
      if (++k > config.max_iterations) {
        throw std::runtime_error("glicko2_update: volatility root not bracketed (" + dump(state, delta, v) + ")");
      }
    }
    B = a - k * config.tau;
  }
  double fA = f(A);
  double fB = f(B);
  for (int it = 0; it < config.max_iterations && std::abs(B - A) > config.convergence_tol; ++it) {
    const double C = A + (A - B) * fA / (fB - fA);
    const double fC = f(C);
    if (fC * fB <= 0.0) {
      A = B;
      fA = fB;
    } else {
      fA /= 2.0;
    }
    B = C;
    fB = fC;
  }
  const double sigma_new = std::exp(A / 2.0);

  const double phi_star = std::sqrt(phi2 + sigma_new * sigma_new);
  const double phi_new = 1.0 / std::sqrt(1.0 / (phi_star * phi_star) + 1.0 / v);
  const double mu_new = mu + phi_new * phi_new * score_sum;
  return {mu_new * config.scale + config.offset, phi_new * config.scale, sigma_new};
}

std::vector<GlickoState> replay_ratings(const GlickoState& initial, const std::vector<GameResult>& games,
                                        const GlickoConfig& config) {
  std::vector<GlickoState> out;
  out.reserve(games.size());
  GlickoState state = initial;
  std::vector<GameResult> period(1);
  for (const auto& game : games) {
    period[0] = game;
    state = glicko2_update(state, period, config);
    out.push_back(state);
  }
  return out;
}

std::string trajectory_csv(const std::vector<GlickoState>& states) {
  std::string out = "game_index,rating,rd,volatility\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    out += io::join_row({std::to_string(i + 1), io::format_double(states[i].rating),
                         io::format_double(states[i].rd), io::format_double(states[i].volatility)});
  }
  return out;
}

}  // namespace momentum::glicko
