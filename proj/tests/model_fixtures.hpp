#pragma once

#include <random>

#include "momentum/features.hpp"

namespace momentum::test {

/// Random cohort built from per-player streams; `sizes` are stream lengths
/// (each player contributes size - n observations).
inline features::Dataset random_dataset(std::mt19937_64& rng, const std::vector<std::size_t>& sizes, int n = 1,
                                        double rating_sd = 60.0) {
  std::normal_distribution<double> diff(0.0, rating_sd);
  std::bernoulli_distribution coin(0.5);
  std::vector<features::PlayerStream> streams;
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    features::PlayerStream s;
    for (std::size_t i = 0; i < sizes[j]; ++i) {
      s.won.push_back(coin(rng) ? 1 : 0);
      s.white.push_back(coin(rng) ? 1.0 : 0.0);
      s.rating_diff.push_back(diff(rng));
    }
    streams.push_back(std::move(s));
    ids.push_back("player" + std::to_string(j + 1));
  }
  return features::dataset_from_streams(std::move(streams), std::move(ids), n);
}

/// The gradient-check instance: three players, 50 observations.
inline features::Dataset gradient_check_dataset(std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  return random_dataset(rng, {18, 17, 18});
}

}  // namespace momentum::test
