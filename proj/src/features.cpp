#include "momentum/features.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "momentum/io.hpp"

namespace momentum::features {

using nlohmann::json;

std::vector<SessionizedGame> segment_sessions(const std::vector<GameRecord>& records, int gap_seconds) {
  if (gap_seconds <= 0) throw std::invalid_argument("segment_sessions: gap_seconds must be positive");
  std::vector<SessionizedGame> out;
  out.reserve(records.size());
  int session = 0;
  int index = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0) {
      const auto gap = records[i].start_time - records[i - 1].start_time;
      if (gap <= 0) {
        throw std::invalid_argument("segment_sessions: start times not strictly increasing at index " +
                                    std::to_string(i));
      }
      if (gap > gap_seconds) {
        ++session;
        index = 0;
      } else {
        ++index;
      }
    }
    out.push_back({records[i], session, index});
  }
  return out;
}

namespace {

double median(std::vector<int> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

void session_sizes(const std::vector<SessionizedGame>& games, std::vector<int>& sizes, int& within_gap,
                   int& with_previous) {
  for (std::size_t i = 0; i < games.size(); ++i) {
    if (games[i].index_in_session == 0) {
      sizes.push_back(1);
    } else {
      ++sizes.back();
      ++within_gap;
    }
    if (i > 0) ++with_previous;
  }
}

SessionStats stats_from_sizes(const std::vector<int>& sizes, int within_gap, int with_previous,
                              const std::vector<int>& thresholds) {
  if (sizes.empty()) throw std::invalid_argument("session_statistics: empty input");
  SessionStats s;
  s.total_sessions = static_cast<int>(sizes.size());
  int games = 0;
  int multi = 0;
  for (int size : sizes) {
    games += size;
    if (size > 1) ++multi;
  }
  s.total_games = games;
  s.fraction_multigame = static_cast<double>(multi) / s.total_sessions;
  s.median_session_length = median(sizes);
  for (int k : thresholds) {
    const auto over = std::count_if(sizes.begin(), sizes.end(), [k](int size) { return size > k; });
    s.fraction_sessions_gt[k] = static_cast<double>(over) / s.total_sessions;
  }
  s.fraction_games_within_gap = with_previous > 0 ? static_cast<double>(within_gap) / with_previous : 0.0;
  return s;
}

}  // namespace

SessionStats session_statistics(const std::vector<SessionizedGame>& sessionized, const std::vector<int>& thresholds) {
  std::vector<int> sizes;
  int within = 0;
  int with_previous = 0;
  session_sizes(sessionized, sizes, within, with_previous);
  return stats_from_sizes(sizes, within, with_previous, thresholds);
}

SessionStats session_statistics(const std::vector<std::vector<SessionizedGame>>& per_player,
                                const std::vector<int>& thresholds) {
  std::vector<int> sizes;
  int within = 0;
  int with_previous = 0;
  for (const auto& games : per_player) session_sizes(games, sizes, within, with_previous);
  return stats_from_sizes(sizes, within, with_previous, thresholds);
}

std::vector<std::optional<double>> compute_win_history(std::span<const std::uint8_t> won, int n) {
  if (n < 1) throw std::invalid_argument("compute_win_history: n must be >= 1");
  std::vector<std::optional<double>> out(won.size());
  const auto window = static_cast<std::size_t>(n);
  int wins = 0;
  for (std::size_t i = 0; i < won.size(); ++i) {
    if (i >= window) out[i] = static_cast<double>(wins) / n;
    wins += won[i] ? 1 : 0;
    if (i >= window) wins -= won[i - window] ? 1 : 0;
  }
  return out;
}

std::vector<std::optional<double>> compute_win_history(const std::vector<GameRecord>& records, int n) {
  std::vector<std::uint8_t> won(records.size());
  std::transform(records.begin(), records.end(), won.begin(),
                 [](const GameRecord& r) { return r.outcome == ingest::Outcome::win ? 1 : 0; });
  return compute_win_history(won, n);
}

Dataset dataset_from_streams(std::vector<PlayerStream> streams, std::vector<std::string> player_ids, int n) {
  if (n < 1) throw std::invalid_argument("dataset_from_streams: n must be >= 1");
  if (streams.size() != player_ids.size()) {
    throw std::invalid_argument("dataset_from_streams: streams and player ids differ in length");
  }
  if (streams.empty()) throw std::invalid_argument("dataset_from_streams: no players");
  Dataset data;
  data.n = n;
  data.xbar.reserve(streams.size());
  for (std::size_t j = 0; j < streams.size(); ++j) {
    const PlayerStream& s = streams[j];
    if (s.white.size() != s.size() || s.rating_diff.size() != s.size()) {
      throw std::invalid_argument("dataset_from_streams: ragged stream for player " + player_ids[j]);
    }
    if (s.size() <= static_cast<std::size_t>(n)) {
      throw std::invalid_argument("dataset_from_streams: player " + player_ids[j] + " has too few games");
    }
    const double wins = static_cast<double>(std::count(s.won.begin(), s.won.end(), std::uint8_t{1}));
    const double xbar = wins / static_cast<double>(s.size());
    data.xbar.push_back(xbar);
    const auto history = compute_win_history(s.won, n);
    for (std::size_t i = static_cast<std::size_t>(n); i < s.size(); ++i) {
      data.observations.push_back({static_cast<double>(s.won[i]), *history[i] - xbar, s.white[i],
                                   s.rating_diff[i], j});
    }
  }
  data.player_ids = std::move(player_ids);
  data.streams = std::move(streams);
  return data;
}

BuildResult build_dataset(const std::vector<PlayerGames>& records_by_player, const FeatureConfig& config) {
  if (config.n < 1) throw std::invalid_argument("build_dataset: n must be >= 1");
  if (records_by_player.empty()) throw std::invalid_argument("build_dataset: no players");
  BuildResult result;
  std::vector<PlayerStream> streams;
  std::vector<std::string> ids;
  for (const auto& player : records_by_player) {
    PlayerStream stream;
    for (std::size_t i = 0; i < player.records.size(); ++i) {
      const GameRecord& r = player.records[i];
      if (i > 0 && r.start_time <= player.records[i - 1].start_time) {
        throw std::invalid_argument("build_dataset: records of " + player.player_id +
                                    " not strictly increasing at index " + std::to_string(i));
      }
      if (config.drop_draws && r.outcome == ingest::Outcome::draw) continue;
      stream.won.push_back(r.outcome == ingest::Outcome::win ? 1 : 0);
      stream.white.push_back(r.focal_color == ingest::Color::white ? 1.0 : 0.0);
      stream.rating_diff.push_back(r.focal_rating - r.opponent_rating);
    }
    if (stream.size() <= static_cast<std::size_t>(config.n)) {
      result.warnings.push_back("player " + player.player_id + " dropped: " + std::to_string(stream.size()) +
                                " qualifying games, need more than " + std::to_string(config.n));
      continue;
    }
    streams.push_back(std::move(stream));
    ids.push_back(player.player_id);
  }
  if (streams.empty()) throw std::invalid_argument("build_dataset: no player has enough games");
  result.dataset = dataset_from_streams(std::move(streams), std::move(ids), config.n);
  return result;
}

std::vector<PlayerGames> group_by_player(const std::vector<GameRecord>& records) {
  std::vector<PlayerGames> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    const std::string key = io::lower(r.focal_id);
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({r.focal_id, {}});
    groups[it->second].records.push_back(r);
  }
  for (auto& g : groups) {
    std::stable_sort(g.records.begin(), g.records.end(),
                     [](const GameRecord& a, const GameRecord& b) { return a.start_time < b.start_time; });
  }
  return groups;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "player_index,y,xtilde,z_color,z_rating_diff\n";
  for (const auto& o : data.observations) {
    out << o.player_index << ',' << io::format_double(o.y) << ',' << io::format_double(o.xtilde) << ','
        << io::format_double(o.z_color) << ',' << io::format_double(o.z_rating_diff) << '\n';
  }
}

std::string dataset_sidecar_json(const Dataset& data, const std::string& config_hash) {
  json j;
  j["player_ids"] = data.player_ids;
  j["xbar"] = data.xbar;
  j["n"] = data.n;
  j["num_observations"] = data.observations.size();
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

Dataset read_dataset(std::istream& csv, const std::string& sidecar_json) {
  const json side = json::parse(sidecar_json);
  Dataset data;
  data.player_ids = side.at("player_ids").get<std::vector<std::string>>();
  data.xbar = side.at("xbar").get<std::vector<double>>();
  data.n = side.at("n").get<int>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = io::split(line, ',');
    if (f.size() != 5) throw std::runtime_error("dataset csv line " + std::to_string(line_no) + ": bad row");
    const auto j = io::parse_int(f[0]);
    const auto y = io::parse_double(f[1]);
    const auto x = io::parse_double(f[2]);
    const auto c = io::parse_double(f[3]);
    const auto d = io::parse_double(f[4]);
    if (!j || !y || !x || !c || !d || *j < 0 || static_cast<std::size_t>(*j) >= data.player_ids.size()) {
      throw std::runtime_error("dataset csv line " + std::to_string(line_no) + ": bad value");
    }
    data.observations.push_back({*y, *x, *c, *d, static_cast<std::size_t>(*j)});
  }
  return data;
}

std::string session_stats_json(const SessionStats& stats) {
  json j;
  j["total_sessions"] = stats.total_sessions;
  j["total_games"] = stats.total_games;
  j["fraction_multigame"] = stats.fraction_multigame;
  j["median_session_length"] = stats.median_session_length;
  json gt = json::object();
  for (const auto& [k, v] : stats.fraction_sessions_gt) gt[std::to_string(k)] = v;
  j["fraction_sessions_gt"] = gt;
  j["fraction_games_within_gap"] = stats.fraction_games_within_gap;
  return j.dump(2) + "\n";
}

}  // namespace momentum::features
