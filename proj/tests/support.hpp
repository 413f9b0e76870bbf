#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "momentum/ingest.hpp"

namespace momentum::test {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(MOMENTUM_TEST_DATA) / name;
}

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("momentum_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ingest::GameRecord game(std::string id, std::int64_t t, ingest::Outcome outcome,
                               ingest::Color color = ingest::Color::white, double focal = 1500.0,
                               double opp = 1500.0, std::string focal_id = "p") {
  ingest::GameRecord r;
  r.game_id = std::move(id);
  r.start_time = t;
  r.base_seconds = 60;
  r.rated = true;
  r.focal_id = std::move(focal_id);
  r.focal_color = color;
  r.focal_rating = focal;
  r.opponent_rating = opp;
  r.outcome = outcome;
  return r;
}

/// Chronological stream with the given outcomes, one game a minute.
inline std::vector<ingest::GameRecord> stream(const std::string& player, const std::vector<ingest::Outcome>& outcomes,
                                              std::int64_t t0 = 1700000000) {
  std::vector<ingest::GameRecord> out;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    out.push_back(game(player + "-" + std::to_string(i), t0 + static_cast<std::int64_t>(i) * 60, outcomes[i],
                       i % 2 ? ingest::Color::black : ingest::Color::white, 1500.0 + static_cast<double>(i % 7),
                       1490.0 + static_cast<double>(i % 11), player));
  }
  return out;
}

inline std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t size, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  std::vector<std::uint8_t> out(size);
  for (auto& b : out) b = coin(rng) ? 1 : 0;
  return out;
}

}  // namespace momentum::test
