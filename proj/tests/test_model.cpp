#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "model_fixtures.hpp"
#include "momentum/model.hpp"

using namespace momentum;
using namespace momentum::model;

namespace {

std::vector<double> random_u(std::mt19937_64& rng, std::size_t dim, double radius = 2.0) {
  std::uniform_real_distribution<double> unif(-radius, radius);
  std::vector<double> u(dim);
  for (auto& v : u) v = unif(rng);
  return u;
}

ModelParams zero_params(std::size_t J) {
  ModelParams p;
  p.alpha.assign(J, 0.0);
  p.beta.assign(J, 0.0);
  return p;
}

features::Dataset single(const ModelObservation& o) {
  features::Dataset d;
  d.observations = {o};
  d.player_ids = {"p"};
  d.xbar = {0.5};
  return d;
}

long double direct_loglik(const ModelParams& p, const features::Dataset& d) {
  long double total = 0.0L;
  for (const auto& o : d.observations) {
    const long double eta = p.alpha[o.player_index] + p.beta[o.player_index] * o.xtilde + p.gamma1 * o.z_color +
                            p.gamma2 * o.z_rating_diff;
    // log p = -log1p(exp(-eta)), log(1 - p) = -log1p(exp(eta))
    total -= o.y > 0.5 ? std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  }
  return total;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("constrain at zero") {
    const std::vector<double> u(unconstrained_dim(3), 0.0);
    const auto c = constrain(u, 3);
    CHECK(c.params.mu_beta == 0.0);
    CHECK(c.params.tau1 == 1.0);
    CHECK(c.params.tau2 == 1.0);
    CHECK(c.params.sigma == 1.0);
    CHECK(c.params.sigma_g2 == 1.0);
    CHECK(c.params.rho == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(c.params.alpha[j] == 0.0);
      CHECK(c.params.beta[j] == 0.0);
    }
  }

  TEST_CASE("constrain exp map and jacobian") {
    std::vector<double> u(unconstrained_dim(0), 0.0);
    u[kLogTau1] = 0.5;
    const auto c = constrain(u, 0);
    CHECK(c.params.tau1 == doctest::Approx(1.6487212707).epsilon(1e-10));
    CHECK(c.log_jacobian == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(constrain(std::vector<double>(5, 0.0), 1), std::invalid_argument);
  }

  TEST_CASE("constrain maps effects through the Cholesky factor") {
    const std::size_t J = 2;
    std::vector<double> u(unconstrained_dim(J), 0.0);
    u[0] = 1.0;   // u_{0,1}
    u[3] = -2.0;  // u_{1,2}
    const double tau1 = 0.7, tau2 = 0.4, rho = 0.3, mu = 0.2;
    u[2 * J + kMuBeta] = mu;
    u[2 * J + kLogTau1] = std::log(tau1);
    u[2 * J + kLogTau2] = std::log(tau2);
    u[2 * J + kAtanhRho] = std::atanh(rho);
    const auto c = constrain(u, J);
    const double l21 = tau2 * rho, l22 = tau2 * std::sqrt(1 - rho * rho);
    CHECK(c.params.alpha[0] == doctest::Approx(tau1));
    CHECK(c.params.beta[0] == doctest::Approx(mu + l21));
    CHECK(c.params.alpha[1] == doctest::Approx(0.0));
    CHECK(c.params.beta[1] == doctest::Approx(mu - 2.0 * l22));
  }

  TEST_CASE("property: constrain/unconstrain round trip") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t J = rng() % 6;
      const auto u = random_u(rng, unconstrained_dim(J), 3.0);
      const auto back = unconstrain(constrain(u, J).params);
      REQUIRE(back.size() == u.size());
      for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(back[i] - u[i]) < 1e-12);
    }
  }

  TEST_CASE("log_likelihood examples") {
    ModelObservation o;
    o.y = 1.0;
    CHECK(log_likelihood(zero_params(1), single(o)) == doctest::Approx(-0.693147180559945).epsilon(1e-14));

    ModelObservation w;
    w.y = 1.0;
    w.z_color = 1.0;
    auto p = zero_params(1);
    p.gamma1 = 0.25;
    CHECK(std::exp(log_likelihood(p, single(w))) == doctest::Approx(0.5622).epsilon(5e-5));
  }

  TEST_CASE("log_likelihood matches a term-by-term sum") {
    std::mt19937_64 rng(20);
    const auto d = test::random_dataset(rng, {8, 7, 8});
    REQUIRE(d.observations.size() == 20);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = constrain(random_u(rng, unconstrained_dim(3)), 3).params;
      const double ll = log_likelihood(p, d);
      CHECK(std::abs(ll - static_cast<double>(direct_loglik(p, d))) < 1e-12);
    }
  }

  TEST_CASE("log_likelihood is stable for extreme linear predictors") {
    ModelObservation o;
    o.y = 0.0;
    o.z_rating_diff = 1.0;
    auto p = zero_params(1);
    p.gamma2 = 700.0;
    CHECK(log_likelihood(p, single(o)) == doctest::Approx(-700.0));
    o.y = 1.0;
    p.gamma2 = -700.0;
    CHECK(log_likelihood(p, single(o)) == doctest::Approx(-700.0));
    p.gamma2 = 700.0;
    CHECK(log_likelihood(p, single(o)) == doctest::Approx(0.0));
    CHECK(std::isfinite(softplus(800.0)));
    CHECK(softplus(-800.0) >= 0.0);
  }

  TEST_CASE("log_prior examples") {
    CHECK(half_normal_lpdf(0.0) == doctest::Approx(std::log(std::sqrt(2.0 / std::numbers::pi))).epsilon(1e-14));
    CHECK(half_normal_lpdf(0.0) == doctest::Approx(-0.225791352644727).epsilon(1e-12));
    CHECK(lkj_corr_2x2_lpdf(0.0, 2.0) == doctest::Approx(std::log(0.75)).epsilon(1e-14));
    CHECK(lkj_corr_2x2_lpdf(1.0, 2.0) == -std::numeric_limits<double>::infinity());
    CHECK(lkj_corr_2x2_lpdf(-1.0, 2.0) == -std::numeric_limits<double>::infinity());
    auto p = zero_params(1);
    p.rho = 1.0;
    CHECK(log_prior(p) == -std::numeric_limits<double>::infinity());
    p.rho = 0.0;
    p.tau1 = -1.0;
    CHECK_THROWS(log_prior(p));
  }

  TEST_CASE("prior densities integrate to one") {
    using boost::math::quadrature::tanh_sinh;
    tanh_sinh<double> integrator;
    const double lkj = integrator.integrate([](double r) { return std::exp(lkj_corr_2x2_lpdf(r, 2.0)); }, -1.0, 1.0);
    CHECK(std::abs(lkj - 1.0) < 1e-8);
    const double hn = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double x) { return std::exp(half_normal_lpdf(x)); }, 0.0, std::numeric_limits<double>::infinity());
    CHECK(std::abs(hn - 1.0) < 1e-8);
  }

  TEST_CASE("inverse-gamma scale prior switch") {
    auto p = zero_params(0);
    ModelOptions ig;
    ig.scale_prior = ScalePrior::inverse_gamma;
    // Inverse-gamma(1, 1) at x = 1 has density e^{-1}; half-normal at 1 is sqrt(2/pi) e^{-1/2}.
    const double diff = log_prior(p, ig) - log_prior(p);
    CHECK(diff == doctest::Approx(5 * (-1.0 - half_normal_lpdf(1.0))).epsilon(1e-12));
  }

  TEST_CASE("gradient matches central finite differences") {
    const auto d = test::gradient_check_dataset();
    REQUIRE(d.observations.size() == 50);
    const LogPosterior lp(d);
    std::mt19937_64 rng(100);
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
      auto u = random_u(rng, lp.dim());
      std::vector<double> g(lp.dim());
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
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("gradient vanishes by symmetry at the origin") {
    features::Dataset d;
    d.player_ids = {"a", "b"};
    d.xbar = {0.5, 0.5};
    for (std::size_t j = 0; j < 2; ++j) {
      for (int k = 0; k < 4; ++k) {
        ModelObservation o;
        o.player_index = j;
        o.y = k % 2;
        o.z_color = k / 2;
        d.observations.push_back(o);
      }
    }
    const auto vg = log_posterior_and_gradient(std::vector<double>(unconstrained_dim(2), 0.0), d);
    CHECK(std::abs(vg.gradient[4 + kMuBeta]) < 1e-14);
    CHECK(std::abs(vg.gradient[4 + kGamma1]) < 1e-14);
    CHECK(std::abs(vg.gradient[4 + kGamma2]) < 1e-14);
  }

  TEST_CASE("log posterior decomposes into likelihood, prior and jacobian") {
    const auto d = test::gradient_check_dataset(8);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const auto u = random_u(rng, unconstrained_dim(3));
      const auto c = constrain(u, 3);
      const double value = log_posterior_and_gradient(u, d).value;
      CHECK(std::abs(value - c.log_jacobian - log_prior(c.params) - log_likelihood(c.params, d)) < 1e-10);
    }
  }

  TEST_CASE("negated history flips the slope") {
    const auto d = test::gradient_check_dataset(12);
    ModelOptions neg;
    neg.negate_history = true;
    std::mt19937_64 rng(6);
    auto p = constrain(random_u(rng, unconstrained_dim(3)), 3).params;
    const double ll = log_likelihood(p, d);
    for (auto& b : p.beta) b = -b;
    CHECK(log_likelihood(p, d, neg) == doctest::Approx(ll).epsilon(1e-13));
  }

  TEST_CASE("win_probability reproduces the reported effect sizes") {
    auto p = zero_params(1);
    ModelObservation o;
    p.gamma2 = 0.0053;
    o.z_rating_diff = 100.0;
    CHECK(std::abs(win_probability(p, o) - 0.6295) < 5e-5);
    CHECK(std::abs(win_probability(p, o) - 0.63) < 0.005);
    p.gamma2 = 0.0037;
    CHECK(std::abs(win_probability(p, o) - 0.5915) < 5e-5);
    CHECK(std::abs(win_probability(p, o) - 0.59) < 0.005);
    p.gamma2 = 0.0;
    p.gamma1 = 0.091;
    o.z_rating_diff = 0.0;
    o.z_color = 1.0;
    CHECK(std::abs(win_probability(p, o) - 0.5227) < 5e-5);
    CHECK(std::abs(win_probability(p, o) - 0.52) < 0.005);
    CHECK(win_probability(zero_params(1), ModelObservation{}) == 0.5);
  }

  TEST_CASE("property: logistic symmetry and monotone win probability") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> eta(-40.0, 40.0);
    for (int i = 0; i < 10000; ++i) {
      const double e = eta(rng);
      CHECK(std::abs(logistic(-e) - (1.0 - logistic(e))) < 1e-15);
    }
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      auto p = zero_params(1);
      p.alpha[0] = unif(rng);
      p.beta[0] = unif(rng);
      p.gamma1 = unif(rng);
      p.gamma2 = 0.01 * unif(rng);
      ModelObservation o;
      o.xtilde = 0.5 * (unif(rng) + 1.0);
      o.z_color = 1.0;
      o.z_rating_diff = 50.0 * (unif(rng) + 1.0);
      const double base = win_probability(p, o);
      for (double* field : {&p.alpha[0], &p.beta[0], &p.gamma1, &p.gamma2}) {
        const double keep = *field;
        *field += 0.1;
        CHECK(win_probability(p, o) > base);
        *field = keep;
      }
    }
  }

  TEST_CASE("effect_to_delta_win_prob") {
    CHECK(effect_to_delta_win_prob(0.0, 0.3) == 0.0);
    // logistic(0.2) - logistic(-0.2)
    CHECK(effect_to_delta_win_prob(0.4, 0.5) == doctest::Approx(0.09966799462495579).epsilon(1e-12));
    CHECK(effect_to_delta_win_prob(-0.4, 0.5) == doctest::Approx(-0.09966799462495579).epsilon(1e-12));
    // Contrast from xtilde = -xbar to 1 - xbar at a non-zero baseline.
    CHECK(effect_to_delta_win_prob(1.0, 0.25, 0.5) == doctest::Approx(logistic(1.25) - logistic(0.25)).epsilon(1e-14));
  }

  TEST_CASE("parameter names and flatten agree") {
    const auto names = parameter_names(2);
    const std::vector<std::string> expected = {"mu_beta", "gamma1", "gamma2",   "tau1",     "tau2",
                                               "rho",     "sigma",  "sigma_g1", "sigma_g2", "alpha[1]",
                                               "alpha[2]", "beta[1]", "beta[2]"};
    CHECK(names == expected);
    std::mt19937_64 rng(1);
    const auto p = constrain(random_u(rng, unconstrained_dim(2)), 2).params;
    const auto flat = flatten(p);
    const auto back = unflatten(flat, 2);
    CHECK(flatten(back) == flat);
    CHECK(flat[9] == p.alpha[0]);
    CHECK(flat[12] == p.beta[1]);
  }

  TEST_CASE("variance guess shrinks the rating coefficient") {
    const auto d = test::gradient_check_dataset();
    const LogPosterior lp(d);
    const auto guess = lp.variance_guess();
    REQUIRE(guess.size() == lp.dim());
    CHECK(guess[6 + kGamma2] < 1e-2);
    CHECK(guess[6 + kGamma2] > 0.0);
    CHECK(guess[6 + kMuBeta] == 1.0);
  }
}
