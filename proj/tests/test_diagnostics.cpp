#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "momentum/diagnostics.hpp"

using namespace momentum;
using namespace momentum::diagnostics;

namespace {

ChainSet iid_normal(std::mt19937_64& rng, std::size_t chains, std::size_t n, double shift_per_chain = 0.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  ChainSet out(chains, std::vector<double>(n));
  for (std::size_t c = 0; c < chains; ++c) {
    for (auto& v : out[c]) v = z(rng) + shift_per_chain * static_cast<double>(c);
  }
  return out;
}

ChainSet ar1(std::mt19937_64& rng, std::size_t chains, std::size_t n, double phi) {
  std::normal_distribution<double> z(0.0, 1.0);
  ChainSet out(chains, std::vector<double>(n));
  for (auto& chain : out) {
    double x = z(rng) / std::sqrt(1 - phi * phi);
    for (auto& v : chain) {
      x = phi * x + z(rng);
      v = x;
    }
  }
  return out;
}

sampler::PosteriorDraws draws_from(const std::vector<ChainSet>& params, const std::vector<std::string>& names) {
  sampler::PosteriorDraws d;
  d.num_chains = params[0].size();
  d.num_iterations = params[0][0].size();
  d.names = names;
  d.values.resize(d.num_chains * d.num_iterations * names.size());
  for (std::size_t p = 0; p < names.size(); ++p) {
    for (std::size_t c = 0; c < d.num_chains; ++c) {
      for (std::size_t i = 0; i < d.num_iterations; ++i) d.at(c, i, p) = params[p][c][i];
    }
  }
  return d;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("split R-hat near one for stationary chains") {
    std::mt19937_64 rng(1);
    const double r = split_rhat(iid_normal(rng, 4, 5000));
    CHECK(r >= 0.99);
    CHECK(r <= 1.01);
  }

  TEST_CASE("split R-hat flags offset chains") {
    std::mt19937_64 rng(2);
    CHECK(split_rhat(iid_normal(rng, 2, 1000, 10.0)) > 1.5);
  }

  TEST_CASE("split R-hat hand-computed value") {
    // Halves [1,2],[3,4] and [2,3],[4,5]; half means 1.5,3.5,2.5,4.5, W = 0.5,
    // B = 2 * var(means) = 2 * 5/3, var+ = (1/2) W + B/2.
    const ChainSet c = {{1, 2, 3, 4}, {2, 3, 4, 5}};
    const double W = 0.5, B = 2.0 * (5.0 / 3.0);
    const double expected = std::sqrt((0.5 * W + B / 2.0) / W);
    CHECK(split_rhat(c) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("split R-hat degenerate and invalid input") {
    CHECK(std::isnan(split_rhat({{1, 1, 1, 1}, {1, 1, 1, 1}})));
    CHECK_THROWS_AS(split_rhat({{1, 2, 3, 4}}), std::invalid_argument);
    CHECK_THROWS_AS(split_rhat({{1, 2, 3}, {1, 2, 3}}), std::invalid_argument);
  }

  TEST_CASE("ESS of independent draws") {
    std::mt19937_64 rng(3);
    const auto chains = iid_normal(rng, 4, 2000);
    const auto e = effective_sample_size(chains);
    CHECK(std::abs(e.bulk / 8000.0 - 1.0) < 0.15);
    CHECK(std::abs(e.tail / 8000.0 - 1.0) < 0.15);
  }

  TEST_CASE("ESS of an AR(1) process") {
    std::mt19937_64 rng(4);
    const double phi = 0.9;
    const auto chains = ar1(rng, 4, 25000, phi);
    const double expected = 100000.0 * (1 - phi) / (1 + phi);
    const auto e = effective_sample_size(chains);
    CHECK(std::abs(e.bulk / expected - 1.0) < 0.25);
  }

  TEST_CASE("ESS of anticorrelated chains exceeds N") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 0.1);
    ChainSet c(4, std::vector<double>(1000));
    for (auto& chain : c) {
      for (std::size_t i = 0; i < chain.size(); ++i) chain[i] = (i % 2 ? 1.0 : -1.0) + z(rng);
    }
    const auto e = effective_sample_size(c);
    CHECK(std::isfinite(e.bulk));
    CHECK(e.bulk > 4000.0);
  }

  TEST_CASE("ESS of constant draws is NaN") {
    const auto e = effective_sample_size({{2, 2, 2, 2}, {2, 2, 2, 2}});
    CHECK(std::isnan(e.bulk));
    CHECK(std::isnan(e.tail));
  }

  TEST_CASE("type-7 quantiles") {
    // Reference values from numpy.quantile's default linear method.
    const std::vector<double> v = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0};
    CHECK(quantile(v, 0.025) == doctest::Approx(1.0));
    CHECK(quantile(v, 0.17) == doctest::Approx(1.19));
    CHECK(quantile(v, 0.5) == doctest::Approx(3.5));
    CHECK(quantile(v, 0.83) == doctest::Approx(5.81));
    CHECK(quantile(v, 0.975) == doctest::Approx(8.475));
    CHECK(quantile({7.0}, 0.3) == 7.0);
  }

  TEST_CASE("summaries of constant and uniform parameters") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ChainSet unif(4, std::vector<double>(1000));
    for (auto& chain : unif) {
      for (auto& v : chain) v = u(rng);
    }
    const ChainSet constant(4, std::vector<double>(1000, 2.5));
    const auto rows = summarize(draws_from({constant, unif}, {"c", "u"}));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].mean == 2.5);
    CHECK(rows[0].sd == 0.0);
    CHECK(rows[0].q2_5 == 2.5);
    CHECK(rows[0].q97_5 == 2.5);
    CHECK(std::abs(rows[1].q50 - 0.5) < 3.0 * 0.5 / std::sqrt(4000.0));
    CHECK(std::abs(rows[1].q2_5 - 0.025) < 0.01);
    for (const auto& r : rows) {
      CHECK(r.q2_5 <= r.q17);
      CHECK(r.q17 <= r.q50);
      CHECK(r.q50 <= r.q83);
      CHECK(r.q83 <= r.q97_5);
    }
    CHECK(max_rhat(rows) < 1.01);
  }

  TEST_CASE("max_rhat treats unexpected NaN as failure") {
    std::vector<SummaryRow> rows(2);
    rows[0].rhat = 1.001;
    rows[1].rhat = std::nan("");
    rows[1].sd = 0.3;
    CHECK(std::isinf(max_rhat(rows)));
    rows[1].sd = 0.0;
    CHECK(max_rhat(rows) == 1.001);
  }

  TEST_CASE("summary CSV round trip") {
    std::mt19937_64 rng(7);
    const auto d = draws_from({iid_normal(rng, 2, 100), iid_normal(rng, 2, 100)}, {"a", "b[1]"});
    const auto rows = summarize(d);
    const auto text = summary_csv(rows);
    CHECK(text.rfind("name,mean,sd,q2.5,q17,q50,q83,q97.5,rhat,ess_bulk,ess_tail\n", 0) == 0);
    const auto back = read_summary_csv(text);
    REQUIRE(back.size() == rows.size());
    CHECK(back[1].name == "b[1]");
    CHECK(back[1].q83 == rows[1].q83);
    CHECK(back[0].ess_tail == rows[0].ess_tail);
  }
}
