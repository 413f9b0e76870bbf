#pragma once

// Session segmentation, rolling win histories and assembly of the model's
// observation set.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "momentum/ingest.hpp"

namespace momentum::features {

using ingest::GameRecord;

inline constexpr int kBulletGapSeconds = 300;
inline constexpr int kBlitzGapSeconds = 420;

struct SessionizedGame {
  GameRecord record;
  int session_id = 0;
  int index_in_session = 0;
};

struct FeatureConfig {
  int n = 1;
  int session_gap_seconds = kBulletGapSeconds;
  bool drop_draws = true;
};

/// One likelihood term.
struct ModelObservation {
  double y = 0.0;              // 1 = focal win
  double xtilde = 0.0;         // centered win ratio over the previous n games
  double z_color = 0.0;        // 1 = white
  double z_rating_diff = 0.0;  // focal minus opponent, rating points
  std::size_t player_index = 0;

  bool operator==(const ModelObservation&) const = default;
};

/// Every game of one player that enters the features (after draw handling),
/// in chronological order. Keeping the full stream lets validation rebuild
/// histories after permuting or simulating outcomes.
struct PlayerStream {
  std::vector<std::uint8_t> won;
  std::vector<double> white;
  std::vector<double> rating_diff;

  std::size_t size() const noexcept { return won.size(); }
};

struct Dataset {
  std::vector<ModelObservation> observations;
  std::vector<std::string> player_ids;
  std::vector<double> xbar;
  int n = 1;
  std::vector<PlayerStream> streams;

  std::size_t num_players() const noexcept { return player_ids.size(); }
};

struct SessionStats {
  int total_sessions = 0;
  int total_games = 0;
  double fraction_multigame = 0.0;
  double median_session_length = 0.0;
  std::map<int, double> fraction_sessions_gt;
  double fraction_games_within_gap = 0.0;
};

/// Game i opens a new session iff its start is more than `gap_seconds` after
/// the previous game's start. Throws std::invalid_argument naming the first
/// index whose start time is not strictly increasing.
std::vector<SessionizedGame> segment_sessions(const std::vector<GameRecord>& records, int gap_seconds);

/// Reference thresholds for `fraction_sessions_gt` default to {10}.
SessionStats session_statistics(const std::vector<SessionizedGame>& sessionized,
                                 const std::vector<int>& thresholds = {10});

/// Pooled statistics over several players' independently segmented streams.
SessionStats session_statistics(const std::vector<std::vector<SessionizedGame>>& per_player,
                                const std::vector<int>& thresholds = {10});

/// x_i = wins among the previous n games / n; empty for the first n games.
std::vector<std::optional<double>> compute_win_history(std::span<const std::uint8_t> won, int n);
std::vector<std::optional<double>> compute_win_history(const std::vector<GameRecord>& records, int n);

struct PlayerGames {
  std::string player_id;
  std::vector<GameRecord> records;
};

struct BuildResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// Builds the observation set. Players with at most n decisive games are
/// dropped with a warning. Throws std::invalid_argument when no player
/// remains or a stream is unsorted.
BuildResult build_dataset(const std::vector<PlayerGames>& records_by_player, const FeatureConfig& config);

/// Rebuilds observations and xbar from per-player streams. Streams shorter
/// than n + 1 are rejected with std::invalid_argument.
Dataset dataset_from_streams(std::vector<PlayerStream> streams, std::vector<std::string> player_ids, int n);

/// Groups records by focal_id in first-appearance order, sorting each group by
/// start time.
std::vector<PlayerGames> group_by_player(const std::vector<GameRecord>& records);

/// Columnar CSV `player_index,y,xtilde,z_color,z_rating_diff`.
void write_dataset_csv(std::ostream& out, const Dataset& data);
/// Sidecar with player_ids, xbar, n and a caller-supplied config hash.
std::string dataset_sidecar_json(const Dataset& data, const std::string& config_hash);
/// Reads the CSV and sidecar back; streams are not stored and stay empty.
Dataset read_dataset(std::istream& csv, const std::string& sidecar_json);

std::string session_stats_json(const SessionStats& stats);

}  // namespace momentum::features
