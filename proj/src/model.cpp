#include "momentum/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace momentum::model {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLogSqrt2OverPi = -0.22579135264472743236;  // log(sqrt(2 / pi))
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 - tanh(z)^2) without cancellation for large |z|.
double log1m_tanh2(double z) noexcept {
  const double a = std::abs(z);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

double normal_lpdf(double x, double scale) noexcept {
  const double t = x / scale;
  return -0.5 * kLog2Pi - std::log(scale) - 0.5 * t * t;
}

double scale_lpdf(double x, ScalePrior prior) noexcept {
  if (prior == ScalePrior::inverse_gamma) return -2.0 * std::log(x) - 1.0 / x;
  return half_normal_lpdf(x);
}

// d/d(log x) of [scale_lpdf(x) + log x].
double scale_grad_log(double x, ScalePrior prior) noexcept {
  if (prior == ScalePrior::inverse_gamma) return -1.0 + 1.0 / x;
  return 1.0 - x * x;
}

void check_dim(std::span<const double> u, std::size_t num_players) {
  if (u.size() != unconstrained_dim(num_players)) {
    throw std::invalid_argument("unconstrained vector has size " + std::to_string(u.size()) + ", expected " +
                                std::to_string(unconstrained_dim(num_players)));
  }
}

}  // namespace

double logistic(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double half_normal_lpdf(double x) noexcept {
  if (x < 0.0) return kNegInf;
  return kLogSqrt2OverPi - 0.5 * x * x;
}

double lkj_corr_2x2_lpdf(double rho, double shape) noexcept {
  if (!(std::abs(rho) < 1.0)) return shape > 1.0 ? kNegInf : std::numeric_limits<double>::infinity();
  // Normalizer: integral of (1 - r^2)^(shape - 1) over (-1, 1) is 2^(2 shape - 1) B(shape, shape).
  const double log_norm =
      (2.0 * shape - 1.0) * std::numbers::ln2 + 2.0 * std::lgamma(shape) - std::lgamma(2.0 * shape);
  return (shape - 1.0) * std::log1p(-rho * rho) - log_norm;
}

Constrained constrain(std::span<const double> u, std::size_t num_players) {
  check_dim(u, num_players);
  const std::size_t g = 2 * num_players;
  Constrained out;
  ModelParams& p = out.params;
  p.mu_beta = u[g + kMuBeta];
  p.gamma1 = u[g + kGamma1];
  p.gamma2 = u[g + kGamma2];
  p.tau1 = std::exp(u[g + kLogTau1]);
  p.tau2 = std::exp(u[g + kLogTau2]);
  p.rho = std::tanh(u[g + kAtanhRho]);
  p.sigma = std::exp(u[g + kLogSigma]);
  p.sigma_g1 = std::exp(u[g + kLogSigmaG1]);
  p.sigma_g2 = std::exp(u[g + kLogSigmaG2]);

  const double log1m_rho2 = log1m_tanh2(u[g + kAtanhRho]);
  const double s = std::exp(0.5 * log1m_rho2);
  p.alpha.resize(num_players);
  p.beta.resize(num_players);
  for (std::size_t j = 0; j < num_players; ++j) {
    const double u1 = u[2 * j];
    const double u2 = u[2 * j + 1];
    p.alpha[j] = p.tau1 * u1;
    p.beta[j] = p.mu_beta + p.tau2 * (p.rho * u1 + s * u2);
  }
  out.log_jacobian = u[g + kLogTau1] + u[g + kLogTau2] + u[g + kLogSigma] + u[g + kLogSigmaG1] +
                     u[g + kLogSigmaG2] + log1m_rho2 +
                     static_cast<double>(num_players) *
                         (u[g + kLogTau1] + u[g + kLogTau2] + 0.5 * log1m_rho2);
  return out;
}

std::vector<double> unconstrain(const ModelParams& p) {
  const std::size_t J = p.num_players();
  if (p.beta.size() != J) throw std::invalid_argument("unconstrain: alpha and beta differ in length");
  if (!(p.tau1 > 0 && p.tau2 > 0 && p.sigma > 0 && p.sigma_g1 > 0 && p.sigma_g2 > 0)) {
    throw std::invalid_argument("unconstrain: scales must be positive");
  }
  if (!(std::abs(p.rho) < 1.0)) throw std::invalid_argument("unconstrain: rho must lie in (-1, 1)");
  std::vector<double> u(unconstrained_dim(J));
  const double s = std::sqrt(1.0 - p.rho * p.rho);
  for (std::size_t j = 0; j < J; ++j) {
    const double u1 = p.alpha[j] / p.tau1;
    u[2 * j] = u1;
    u[2 * j + 1] = ((p.beta[j] - p.mu_beta) / p.tau2 - p.rho * u1) / s;
  }
  const std::size_t g = 2 * J;
  u[g + kMuBeta] = p.mu_beta;
  u[g + kGamma1] = p.gamma1;
  u[g + kGamma2] = p.gamma2;
  u[g + kLogTau1] = std::log(p.tau1);
  u[g + kLogTau2] = std::log(p.tau2);
  u[g + kAtanhRho] = std::atanh(p.rho);
  u[g + kLogSigma] = std::log(p.sigma);
  u[g + kLogSigmaG1] = std::log(p.sigma_g1);
  u[g + kLogSigmaG2] = std::log(p.sigma_g2);
  return u;
}

std::vector<std::string> parameter_names(std::size_t num_players) {
  std::vector<std::string> names = {"mu_beta", "gamma1", "gamma2", "tau1",    "tau2",
                                    "rho",     "sigma",  "sigma_g1", "sigma_g2"};
  for (std::size_t j = 0; j < num_players; ++j) names.push_back("alpha[" + std::to_string(j + 1) + "]");
  for (std::size_t j = 0; j < num_players; ++j) names.push_back("beta[" + std::to_string(j + 1) + "]");
  return names;
}

std::vector<double> flatten(const ModelParams& p) {
  std::vector<double> v = {p.mu_beta, p.gamma1, p.gamma2, p.tau1, p.tau2, p.rho, p.sigma, p.sigma_g1, p.sigma_g2};
  v.insert(v.end(), p.alpha.begin(), p.alpha.end());
  v.insert(v.end(), p.beta.begin(), p.beta.end());
  return v;
}

ModelParams unflatten(std::span<const double> v, std::size_t num_players) {
  if (v.size() != kNumGlobal + 2 * num_players) throw std::invalid_argument("unflatten: size mismatch");
  ModelParams p;
  p.mu_beta = v[0];
  p.gamma1 = v[1];
  p.gamma2 = v[2];
  p.tau1 = v[3];
  p.tau2 = v[4];
  p.rho = v[5];
  p.sigma = v[6];
  p.sigma_g1 = v[7];
  p.sigma_g2 = v[8];
  p.alpha.assign(v.begin() + kNumGlobal, v.begin() + kNumGlobal + num_players);
  p.beta.assign(v.begin() + kNumGlobal + num_players, v.end());
  return p;
}

Design::Design(const Dataset& data, bool negate_history) {
  const std::size_t J = data.num_players();
  std::vector<std::size_t> counts(J, 0);
  for (const auto& o : data.observations) {
    if (o.player_index >= J) throw std::invalid_argument("Design: player_index out of range");
    ++counts[o.player_index];
  }
  offsets_.assign(J + 1, 0);
  for (std::size_t j = 0; j < J; ++j) offsets_[j + 1] = offsets_[j] + counts[j];
  const std::size_t N = data.observations.size();
  y_.resize(N);
  x_.resize(N);
  color_.resize(N);
  rating_.resize(N);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  const double sign = negate_history ? -1.0 : 1.0;
  for (const auto& o : data.observations) {
    const std::size_t k = cursor[o.player_index]++;
    y_[k] = o.y;
    x_[k] = sign * o.xtilde;
    color_[k] = o.z_color;
    rating_[k] = o.z_rating_diff;
    ss_color_ += o.z_color * o.z_color;
    ss_rating_ += o.z_rating_diff * o.z_rating_diff;
  }
}

kernels::BlockView Design::block(std::size_t player) const noexcept {
  const std::size_t b = offsets_[player];
  return {y_.data() + b, x_.data() + b, color_.data() + b, rating_.data() + b, offsets_[player + 1] - b};
}

double log_likelihood(const ModelParams& params, const Dataset& data, const ModelOptions& options) {
  if (params.alpha.size() != data.num_players() || params.beta.size() != data.num_players()) {
    throw std::invalid_argument("log_likelihood: parameter dimensions do not match the dataset");
  }
  const Design design(data, options.negate_history);
  const auto kernel = kernels::active_kernel();
  double total = 0.0;
  for (std::size_t j = 0; j < design.num_players(); ++j) {
    total += kernel(design.block(j), {params.alpha[j], params.beta[j], params.gamma1, params.gamma2}).loglik;
  }
  return total;
}

double log_prior(const ModelParams& p, const ModelOptions& options) {
  if (!(p.tau1 > 0 && p.tau2 > 0 && p.sigma > 0 && p.sigma_g1 > 0 && p.sigma_g2 > 0)) {
    throw std::invalid_argument("log_prior: scale parameters must be positive");
  }
  if (p.alpha.size() != p.beta.size()) throw std::invalid_argument("log_prior: alpha and beta differ in length");
  if (!(std::abs(p.rho) < 1.0)) return kNegInf;

  const double one_m_rho2 = 1.0 - p.rho * p.rho;
  const double log_det_half = std::log(p.tau1) + std::log(p.tau2) + 0.5 * std::log(one_m_rho2);
  double lp = 0.0;
  for (std::size_t j = 0; j < p.alpha.size(); ++j) {
    const double a = p.alpha[j] / p.tau1;
    const double b = (p.beta[j] - p.mu_beta) / p.tau2;
    const double q = (a * a - 2.0 * p.rho * a * b + b * b) / one_m_rho2;
    lp += -kLog2Pi - log_det_half - 0.5 * q;
  }
  lp += normal_lpdf(p.mu_beta, p.sigma);
  lp += normal_lpdf(p.gamma1, p.sigma_g1);
  lp += normal_lpdf(p.gamma2, p.sigma_g2);
  for (double s : {p.tau1, p.tau2, p.sigma, p.sigma_g1, p.sigma_g2}) lp += scale_lpdf(s, options.scale_prior);
  lp += lkj_corr_2x2_lpdf(p.rho, options.lkj_shape);
  return lp;
}

double win_probability(const ModelParams& params, const ModelObservation& obs) {
  const std::size_t j = obs.player_index;
  return logistic(params.alpha.at(j) + params.beta.at(j) * obs.xtilde + params.gamma1 * obs.z_color +
                  params.gamma2 * obs.z_rating_diff);
}

double effect_to_delta_win_prob(double beta_j, double xbar_j, double baseline_logodds) {
  return logistic(baseline_logodds + beta_j * (1.0 - xbar_j)) - logistic(baseline_logodds - beta_j * xbar_j);
}

LogPosterior::LogPosterior(const Dataset& data, ModelOptions options, kernels::BlockKernel kernel)
    : design_(data, options.negate_history), options_(options), kernel_(kernel) {}

double LogPosterior::operator()(std::span<const double> u, std::span<double> grad) const {
  const std::size_t J = design_.num_players();
  check_dim(u, J);
  if (grad.size() != u.size()) throw std::invalid_argument("LogPosterior: gradient buffer has the wrong size");
  const std::size_t g = 2 * J;

  const double mu = u[g + kMuBeta];
  const double gamma1 = u[g + kGamma1];
  const double gamma2 = u[g + kGamma2];
  const double tau1 = std::exp(u[g + kLogTau1]);
  const double tau2 = std::exp(u[g + kLogTau2]);
  const double z = u[g + kAtanhRho];
  const double rho = std::tanh(z);
  const double log1m_rho2 = log1m_tanh2(z);
  const double one_m_rho2 = std::exp(log1m_rho2);
  const double s = std::sqrt(one_m_rho2);
  const double sigma = std::exp(u[g + kLogSigma]);
  const double sigma_g1 = std::exp(u[g + kLogSigmaG1]);
  const double sigma_g2 = std::exp(u[g + kLogSigmaG2]);

  double loglik = 0.0;
  double lp = 0.0;
  double g_mu = 0.0, g_gamma1 = 0.0, g_gamma2 = 0.0, g_logtau1 = 0.0, g_logtau2 = 0.0, g_z = 0.0;

  for (std::size_t j = 0; j < J; ++j) {
    const double u1 = u[2 * j];
    const double u2 = u[2 * j + 1];
    const double dev = tau2 * (rho * u1 + s * u2);
    const double alpha = tau1 * u1;
    const double beta = mu + dev;
    const kernels::BlockSums sums = kernel_(design_.block(j), {alpha, beta, gamma1, gamma2});
    loglik += sums.loglik;
    g_gamma1 += sums.resid_color;
    g_gamma2 += sums.resid_rating;
    const double ga = sums.resid;
    const double gb = sums.resid_x;
    g_mu += gb;
    g_logtau1 += ga * alpha;
    g_logtau2 += gb * dev;
    g_z += gb * tau2 * (one_m_rho2 * u1 - rho * s * u2);
    // Standard-normal prior on u_j: the bivariate normal on (alpha_j, beta_j) plus its Jacobian.
    lp += -kLog2Pi - 0.5 * (u1 * u1 + u2 * u2);
    grad[2 * j] = ga * tau1 + gb * tau2 * rho - u1;
    grad[2 * j + 1] = gb * tau2 * s - u2;
  }

  lp += normal_lpdf(mu, sigma) + normal_lpdf(gamma1, sigma_g1) + normal_lpdf(gamma2, sigma_g2);
  g_mu -= mu / (sigma * sigma);
  g_gamma1 -= gamma1 / (sigma_g1 * sigma_g1);
  g_gamma2 -= gamma2 / (sigma_g2 * sigma_g2);
  const double g_logsigma = -1.0 + (mu * mu) / (sigma * sigma);
  const double g_logsigma_g1 = -1.0 + (gamma1 * gamma1) / (sigma_g1 * sigma_g1);
  const double g_logsigma_g2 = -1.0 + (gamma2 * gamma2) / (sigma_g2 * sigma_g2);

  const ScalePrior prior = options_.scale_prior;
  lp += scale_lpdf(tau1, prior) + u[g + kLogTau1];
  lp += scale_lpdf(tau2, prior) + u[g + kLogTau2];
  lp += scale_lpdf(sigma, prior) + u[g + kLogSigma];
  lp += scale_lpdf(sigma_g1, prior) + u[g + kLogSigmaG1];
  lp += scale_lpdf(sigma_g2, prior) + u[g + kLogSigmaG2];

  // LKJ on rho plus the tanh Jacobian.
  const double eta = options_.lkj_shape;
  lp += lkj_corr_2x2_lpdf(0.0, eta) + (eta - 1.0) * log1m_rho2 + log1m_rho2;
  g_z += -2.0 * eta * rho;

  grad[g + kMuBeta] = g_mu;
  grad[g + kGamma1] = g_gamma1;
  grad[g + kGamma2] = g_gamma2;
  grad[g + kLogTau1] = g_logtau1 + scale_grad_log(tau1, prior);
  grad[g + kLogTau2] = g_logtau2 + scale_grad_log(tau2, prior);
  grad[g + kAtanhRho] = g_z;
  grad[g + kLogSigma] = g_logsigma + scale_grad_log(sigma, prior);
  grad[g + kLogSigmaG1] = g_logsigma_g1 + scale_grad_log(sigma_g1, prior);
  grad[g + kLogSigmaG2] = g_logsigma_g2 + scale_grad_log(sigma_g2, prior);

  return loglik + lp;
}

std::vector<double> LogPosterior::variance_guess() const {
  std::vector<double> v(dim(), 1.0);
  const std::size_t g = 2 * num_players();
  // Each observation carries at most 1/4 unit of information.
  if (design_.sum_sq_color() > 0.0) v[g + kGamma1] = std::min(1.0, 4.0 / design_.sum_sq_color());
  if (design_.sum_sq_rating() > 0.0) v[g + kGamma2] = std::min(1.0, 4.0 / design_.sum_sq_rating());
  return v;
}

double LogPosterior::value(std::span<const double> u) const {
  std::vector<double> scratch(u.size());
  return (*this)(u, scratch);
}

ValueAndGradient log_posterior_and_gradient(std::span<const double> u, const Dataset& data,
                                            const ModelOptions& options) {
  const LogPosterior target(data, options);
  ValueAndGradient out;
  out.gradient.resize(u.size());
  out.value = target(u, out.gradient);
  return out;
}

}  // namespace momentum::model
