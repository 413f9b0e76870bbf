#pragma once

// Game-export ingestion: NDJSON and PGN parsers producing per-focal-player
// game streams, filters, and the canonical tab-separated games file.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace momentum::ingest {

enum class Variant { standard, other };
enum class Color { white, black };
enum class Outcome { win, loss, draw };
enum class Termination { normal, time_forfeit, other };

/// One rated game seen from the focal player's side. Ratings are pre-game.
struct GameRecord {
  std::string game_id;
  std::int64_t start_time = 0;  // UTC seconds since epoch
  int base_seconds = 0;
  int increment_seconds = 0;
  bool rated = false;
  Variant variant = Variant::standard;
  std::string focal_id;
  Color focal_color = Color::white;
  double focal_rating = 0.0;
  double opponent_rating = 0.0;
  Outcome outcome = Outcome::draw;
  Termination termination = Termination::normal;

  bool operator==(const GameRecord&) const = default;
};

struct TimeControlFilter {
  int base_seconds = 60;
  int increment_seconds = 0;
};

inline constexpr TimeControlFilter kBullet{60, 0};
inline constexpr TimeControlFilter kBlitz{180, 0};

/// A line (or game) that could not be turned into a record.
struct Reject {
  std::size_t line_no = 0;
  std::string reason;
};

struct ParseResult {
  std::vector<GameRecord> records;
  std::vector<Reject> rejects;
};

/// One JSON object per line, as served by the per-user export endpoint.
/// Input order is preserved; malformed lines are reported and skipped.
ParseResult parse_ndjson_export(std::istream& in, std::string_view focal_id);

/// Concatenated PGN games. Only header tags are consumed; movetext is skipped.
ParseResult parse_pgn_export(std::istream& in, std::string_view focal_id);

/// Keeps games with the given time control (when set), optionally only rated
/// and only standard-variant games. Order-preserving and idempotent.
std::vector<GameRecord> filter_games(const std::vector<GameRecord>& records,
                                     std::optional<TimeControlFilter> filter, bool rated_only,
                                     bool standard_only);

/// Sorts a single player's records by start time and rejects duplicate start
/// times (the later record in input order is the one rejected). Reject
/// line numbers are 1-based positions in the input vector.
ParseResult sort_and_dedupe(std::vector<GameRecord> records);

/// Drops aborted or otherwise abnormal games (termination == other).
std::vector<GameRecord> drop_abnormal(const std::vector<GameRecord>& records);

/// Case-insensitive username comparison.
bool same_user(std::string_view a, std::string_view b) noexcept;

std::string_view to_string(Variant v) noexcept;
std::string_view to_string(Color c) noexcept;
std::string_view to_string(Outcome o) noexcept;
std::string_view to_string(Termination t) noexcept;

/// Canonical games file: header line, then one tab-separated game per line.
void write_canonical(std::ostream& out, const std::vector<GameRecord>& records);
ParseResult read_canonical(std::istream& in);

/// `line_no <TAB> reason` per reject.
void write_rejects(std::ostream& out, const std::vector<Reject>& rejects);

}  // namespace momentum::ingest
