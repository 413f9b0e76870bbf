#pragma once

// Hierarchical logistic regression for winner-loser effects.
//
//   P(y_ij = 1) = logistic(alpha_j + beta_j * xtilde_ij + gamma1 * white_ij + gamma2 * ratingdiff_ij)
//   (alpha_j, beta_j) ~ N((0, mu_beta), diag(tau) Omega diag(tau))
//   mu_beta ~ N(0, sigma^2), gamma_k ~ N(0, sigma_gk^2)
//   tau1, tau2, sigma, sigma_g1, sigma_g2 ~ half-normal(0, 1)   (or inverse-gamma(1, 1))
//   Omega ~ LKJ(2)
//
// The sampler works on an unconstrained vector of size 2J + 9:
//   [u_{0,1}, u_{0,2}, ..., u_{J-1,1}, u_{J-1,2},
//    mu_beta, gamma1, gamma2, log tau1, log tau2, atanh rho, log sigma, log sigma_g1, log sigma_g2]
// with (alpha_j, beta_j) = (0, mu_beta) + L u_j, L the lower Cholesky factor of Sigma.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "momentum/features.hpp"
#include "momentum/kernels.hpp"

namespace momentum::model {

using features::Dataset;
using features::ModelObservation;

inline constexpr std::size_t kNumGlobal = 9;

/// Indices of the global block inside the unconstrained vector, offset by 2J.
enum GlobalIndex : std::size_t {
  kMuBeta = 0,
  kGamma1,
  kGamma2,
  kLogTau1,
  kLogTau2,
  kAtanhRho,
  kLogSigma,
  kLogSigmaG1,
  kLogSigmaG2,
};

struct ModelParams {
  double mu_beta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double tau1 = 1.0;
  double tau2 = 1.0;
  double rho = 0.0;
  double sigma = 1.0;
  double sigma_g1 = 1.0;
  double sigma_g2 = 1.0;
  std::vector<double> alpha;
  std::vector<double> beta;

  std::size_t num_players() const noexcept { return alpha.size(); }
};

enum class ScalePrior { half_normal, inverse_gamma };

struct ModelOptions {
  ScalePrior scale_prior = ScalePrior::half_normal;
  double lkj_shape = 2.0;
  /// Negative-control switch: the likelihood sees -xtilde.
  bool negate_history = false;
};

constexpr std::size_t unconstrained_dim(std::size_t num_players) noexcept {
  return 2 * num_players + kNumGlobal;
}

struct Constrained {
  ModelParams params;
  double log_jacobian = 0.0;
};

/// Throws std::invalid_argument when u.size() != 2J + 9.
Constrained constrain(std::span<const double> u, std::size_t num_players);
std::vector<double> unconstrain(const ModelParams& params);

/// Names in draw-column order: the nine globals, then alpha[1..J], beta[1..J].
std::vector<std::string> parameter_names(std::size_t num_players);
/// Flattens params in the same order as parameter_names.
std::vector<double> flatten(const ModelParams& params);
ModelParams unflatten(std::span<const double> values, std::size_t num_players);

double log_likelihood(const ModelParams& params, const Dataset& data, const ModelOptions& options = {});
double log_prior(const ModelParams& params, const ModelOptions& options = {});

double logistic(double eta) noexcept;
/// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;

double win_probability(const ModelParams& params, const ModelObservation& obs);

/// Additive change in win probability when the recent record moves from all
/// losses (xtilde = -xbar) to all wins (xtilde = 1 - xbar), other terms held at
/// `baseline_logodds`. For n = 1 this is the previous-game loss-to-win contrast.
double effect_to_delta_win_prob(double beta_j, double xbar_j, double baseline_logodds = 0.0);

/// Half-normal(0, 1) log density at x >= 0.
double half_normal_lpdf(double x) noexcept;
/// LKJ log density of a 2x2 correlation matrix with off-diagonal rho.
double lkj_corr_2x2_lpdf(double rho, double shape) noexcept;

/// Struct-of-arrays copy of a dataset grouped by player, the layout the block
/// kernels consume.
class Design {
 public:
  explicit Design(const Dataset& data, bool negate_history = false);

  std::size_t num_players() const noexcept { return offsets_.size() - 1; }
  std::size_t num_observations() const noexcept { return y_.size(); }
  kernels::BlockView block(std::size_t player) const noexcept;
  double sum_sq_color() const noexcept { return ss_color_; }
  double sum_sq_rating() const noexcept { return ss_rating_; }

 private:
  std::vector<double> y_, x_, color_, rating_;
  std::vector<std::size_t> offsets_;
  double ss_color_ = 0.0;
  double ss_rating_ = 0.0;
};

/// Log posterior on the unconstrained scale with its analytic gradient.
/// Stateless after construction and safe to call from several threads.
class LogPosterior {
 public:
  LogPosterior(const Dataset& data, ModelOptions options = {},
               kernels::BlockKernel kernel = kernels::active_kernel());

  std::size_t dim() const noexcept { return unconstrained_dim(design_.num_players()); }
  std::size_t num_players() const noexcept { return design_.num_players(); }

  /// Returns the log density and writes d/du into `grad` (size dim()).
  /// A non-finite return marks the point as outside the usable region.
  double operator()(std::span<const double> u, std::span<double> grad) const;

  /// Log density without the gradient.
  double value(std::span<const double> u) const;

  const ModelOptions& options() const noexcept { return options_; }

  /// Rough posterior variances on the unconstrained scale, used to start
  /// metric adaptation: Fisher-information scale for the gammas, 1 elsewhere.
  std::vector<double> variance_guess() const;

 private:
  Design design_;
  ModelOptions options_;
  kernels::BlockKernel kernel_;
};

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Convenience wrapper around LogPosterior for one-off evaluations.
ValueAndGradient log_posterior_and_gradient(std::span<const double> u, const Dataset& data,
                                            const ModelOptions& options = {});

}  // namespace momentum::model
