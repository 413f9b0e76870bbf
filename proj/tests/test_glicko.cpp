#include <doctest.h>

#include <cmath>
#include <random>

#include "momentum/glicko.hpp"

using namespace momentum::glicko;

namespace {

const std::vector<GameResult> kWorkedExample = {{1400, 30, 1}, {1550, 100, 0}, {1700, 300, 0}};

std::vector<GameResult> random_games(std::mt19937_64& rng, std::size_t size) {
  std::normal_distribution<double> rating(1500.0, 200.0);
  std::uniform_real_distribution<double> rd(30.0, 300.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<GameResult> out(size);
  for (auto& g : out) g = {rating(rng), rd(rng), coin(rng) ? 1.0 : 0.0};
  return out;
}

}  // namespace

TEST_SUITE("glicko") {
  TEST_CASE("worked example") {
    // Oracle: the standard step list executed independently in double precision
    // (v = 1.77898, delta = -0.48393, sigma' = 0.0599960).
    const auto s = glicko2_update({1500, 200, 0.06}, kWorkedExample);
    CHECK(std::abs(s.rating - 1464.0506705393013) < 1e-6);
    CHECK(std::abs(s.rd - 151.51652412385727) < 1e-6);
    CHECK(std::abs(s.volatility - 0.059995984286488495) < 1e-8);
    CHECK(std::abs(s.rating - 1464.05) < 0.01);
    CHECK(std::abs(s.rd - 151.52) < 0.01);
  }

  TEST_CASE("empty period only inflates the deviation") {
    const auto s = glicko2_update({1500, 350, 0.06}, {});
    CHECK(s.rating == 1500.0);
    CHECK(s.volatility == 0.06);
    CHECK(s.rd == doctest::Approx(350.15516610002004).epsilon(1e-12));
    CHECK(s.rd > 350.0);
  }

  TEST_CASE("one win and one loss against equal opponents leaves the rating unchanged") {
    const auto s = glicko2_update({1700, 80, 0.06}, {{1700, 80, 1}, {1700, 80, 0}});
    CHECK(std::abs(s.rating - 1700.0) < 0.01);
  }

  TEST_CASE("replay: monotone gains, empty input and compositionality") {
    std::vector<GameResult> wins(30, {1500, 45, 1});
    const auto states = replay_ratings({1500, 45, 0.06}, wins);
    REQUIRE(states.size() == 30);
    for (std::size_t i = 1; i < states.size(); ++i) CHECK(states[i].rating > states[i - 1].rating);
    CHECK(replay_ratings({1500, 45, 0.06}, {}).empty());

    std::mt19937_64 rng(1000);
    const auto games = random_games(rng, 1000);
    const auto replay = replay_ratings({1600, 120, 0.06}, games);
    GlickoState s{1600, 120, 0.06};
    for (std::size_t i = 0; i < games.size(); ++i) {
      s = glicko2_update(s, {games[i]});
      CHECK(replay[i].rating == s.rating);
      CHECK(replay[i].rd == s.rd);
      CHECK(replay[i].volatility == s.volatility);
    }
  }

  TEST_CASE("property: translation equivariance") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> shift(-400.0, 400.0);
    for (int trial = 0; trial < 200; ++trial) {
      auto games = random_games(rng, 1 + rng() % 5);
      const GlickoState start{1500 + shift(rng), 50 + 250 * std::generate_canonical<double, 53>(rng), 0.06};
      const double c = shift(rng);
      auto moved_games = games;
      for (auto& g : moved_games) g.opp_rating += c;
      const auto a = glicko2_update(start, games);
      const auto b = glicko2_update({start.rating + c, start.rd, start.volatility}, moved_games);
      CHECK(std::abs(b.rating - (a.rating + c)) < 1e-8);
      CHECK(std::abs(b.rd - a.rd) < 1e-9);
    }
  }

  TEST_CASE("property: deviation contracts after a non-empty period") {
    std::mt19937_64 rng(2);
    const GlickoConfig cfg;
    for (int trial = 0; trial < 500; ++trial) {
      const auto games = random_games(rng, 1 + rng() % 4);
      const GlickoState start{1500, 30 + 320 * std::generate_canonical<double, 53>(rng), 0.06};
      const auto s = glicko2_update(start, games);
      const double phi = start.rd / cfg.scale;
      const double inflated = std::sqrt(phi * phi + s.volatility * s.volatility) * cfg.scale;
      CHECK(s.rd < inflated);
    }
  }

  TEST_CASE("property: a loss instead of a win lowers the rating") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
      auto games = random_games(rng, 1 + rng() % 4);
      games[0].score = 1.0;
      const GlickoState start{1500, 45 + 200 * std::generate_canonical<double, 53>(rng), 0.06};
      const double win = glicko2_update(start, games).rating;
      games[0].score = 0.0;
      CHECK(glicko2_update(start, games).rating < win);
    }
  }

  TEST_CASE("volatility tau range stays well behaved") {
    for (double tau : {0.3, 0.5, 0.8, 1.2}) {
      GlickoConfig cfg;
      cfg.tau = tau;
      const auto s = glicko2_update({1500, 200, 0.06}, kWorkedExample, cfg);
      CHECK(std::isfinite(s.rating));
      CHECK(s.volatility > 0.0);
    }
  }

  TEST_CASE("trajectory CSV") {
    const auto csv = trajectory_csv(replay_ratings({1500, 45, 0.06}, {{1500, 45, 1}, {1500, 45, 0}}));
    CHECK(csv.rfind("game_index,rating,rd,volatility\n1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
