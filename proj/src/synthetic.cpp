#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "momentum/validate.hpp"

namespace momentum::validate {

namespace {

constexpr int kMaxFixedPointIterations = 64;

double half_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  return std::abs(z(rng));
}

double draw_scale(std::mt19937_64& rng, model::ScalePrior prior) {
  if (prior == model::ScalePrior::inverse_gamma) {
    std::gamma_distribution<double> g(1.0, 1.0);
    return 1.0 / g(rng);
  }
  return half_normal(rng);
}

}  // namespace

model::ModelParams draw_from_prior(std::mt19937_64& rng, const model::ModelOptions& options) {
  model::ModelParams p;
  p.tau1 = draw_scale(rng, options.scale_prior);
  p.tau2 = draw_scale(rng, options.scale_prior);
  p.sigma = draw_scale(rng, options.scale_prior);
  p.sigma_g1 = draw_scale(rng, options.scale_prior);
  p.sigma_g2 = draw_scale(rng, options.scale_prior);
  // LKJ(eta) on a 2x2 matrix: (rho + 1) / 2 ~ Beta(eta, eta).
  std::gamma_distribution<double> ga(options.lkj_shape, 1.0);
  const double a = ga(rng);
  const double b = ga(rng);
  p.rho = 2.0 * a / (a + b) - 1.0;
  std::normal_distribution<double> z(0.0, 1.0);
  p.mu_beta = p.sigma * z(rng);
  p.gamma1 = p.sigma_g1 * z(rng);
  p.gamma2 = p.sigma_g2 * z(rng);
  return p;
}

SyntheticData simulate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_players == 0) throw std::invalid_argument("simulate_synthetic: need at least one player");
  if (spec.n < 1) throw std::invalid_argument("simulate_synthetic: n must be >= 1");
  if (spec.games_per_player <= static_cast<std::size_t>(spec.n)) {
    throw std::invalid_argument("simulate_synthetic: games_per_player must exceed n");
  }
  const std::size_t J = spec.num_players;
  const std::size_t N = spec.games_per_player;
  const auto window = static_cast<std::size_t>(spec.n);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SyntheticData out;
  out.truth = spec.truth;
  model::ModelParams& truth = out.truth;
  const bool given = !truth.alpha.empty() || !truth.beta.empty();
  if (given && (truth.alpha.size() != J || truth.beta.size() != J)) {
    throw std::invalid_argument("simulate_synthetic: explicit alpha/beta must have one entry per player");
  }
  if (!given) {
    truth.alpha.resize(J);
    truth.beta.resize(J);
    const double s = std::sqrt(1.0 - truth.rho * truth.rho);
    for (std::size_t j = 0; j < J; ++j) {
      const double u1 = z(rng);
      const double u2 = z(rng);
      truth.alpha[j] = truth.tau1 * u1;
      truth.beta[j] = truth.mu_beta + truth.tau2 * (truth.rho * u1 + s * u2);
    }
  }

  std::bernoulli_distribution white(spec.white_probability);
  std::vector<features::PlayerStream> streams(J);
  std::vector<std::string> ids(J);
  for (std::size_t j = 0; j < J; ++j) {
    ids[j] = "player" + std::to_string(j + 1);
    features::PlayerStream& s = streams[j];
    s.won.assign(N, 0);
    s.white.resize(N);
    s.rating_diff.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      s.white[i] = white(rng) ? 1.0 : 0.0;
      s.rating_diff[i] = spec.rating_diff_sd * z(rng);
    }
    std::vector<double> base(N);
    for (std::size_t i = 0; i < N; ++i) {
      base[i] = truth.alpha[j] + truth.gamma1 * s.white[i] + truth.gamma2 * s.rating_diff[i];
    }

    // xtilde depends on xbar, which depends on every outcome. With the
    // uniforms held fixed, look for a win count k whose xbar = k / N
    // reproduces k wins; redraw the uniforms if there is none.
    std::vector<double> uniforms(N);
    const auto wins_given = [&](std::size_t k, std::vector<double>* xtilde = nullptr) {
      const double xbar = static_cast<double>(k) / static_cast<double>(N);
      std::size_t wins = 0;
      int recent = 0;
      for (std::size_t i = 0; i < N; ++i) {
        double eta = base[i];
        if (i >= window) {
          const double xt = static_cast<double>(recent) / spec.n - xbar;
          eta += truth.beta[j] * xt;
          if (xtilde) xtilde->push_back(xt);
        }
        const std::uint8_t y = uniforms[i] < model::logistic(eta) ? 1 : 0;
        s.won[i] = y;
        wins += y;
        recent += y;
        if (i >= window) recent -= s.won[i - window];
      }
      return wins;
    };
    for (;;) {
      for (double& u : uniforms) u = unif(rng);
      std::optional<std::size_t> fixed;
      if (truth.beta[j] > 0.0) {
        // Every outcome is non-increasing in xbar, so wins(k) - k is
        // decreasing and bisection finds the only candidate.
        std::size_t lo = 0, hi = N;  // wins(lo) >= lo, invariant
        while (lo < hi) {
          const std::size_t mid = lo + (hi - lo + 1) / 2;
          if (wins_given(mid) >= mid) {
            lo = mid;
          } else {
            hi = mid - 1;
          }
        }
        if (wins_given(lo) == lo) fixed = lo;
      } else {
        std::size_t k = N / 2;
        for (int it = 0; it < kMaxFixedPointIterations; ++it) {
          const std::size_t next = wins_given(k);
          if (next == k) {
            fixed = k;
            break;
          }
          k = next;
        }
      }
      if (fixed) {
        wins_given(*fixed, &out.generator_xtilde);
        break;
      }
      ++out.redraws;
    }
  }
  out.dataset = features::dataset_from_streams(std::move(streams), std::move(ids), spec.n);
  return out;
}

}  // namespace momentum::validate
