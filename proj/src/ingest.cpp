#include "momentum/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "momentum/io.hpp"

namespace momentum::ingest {

using nlohmann::json;

bool same_user(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ca = static_cast<unsigned char>(a[i]);
    const auto cb = static_cast<unsigned char>(b[i]);
    if (std::tolower(ca) != std::tolower(cb)) return false;
  }
  return true;
}

std::string_view to_string(Variant v) noexcept { return v == Variant::standard ? "standard" : "other"; }
std::string_view to_string(Color c) noexcept { return c == Color::white ? "white" : "black"; }

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::win:
      return "win";
    case Outcome::loss:
      return "loss";
    case Outcome::draw:
      break;
  }
  return "draw";
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::normal:
      return "normal";
    case Termination::time_forfeit:
      return "time_forfeit";
    case Termination::other:
      break;
  }
  return "other";
}

namespace {

Termination termination_from_status(std::string_view status) {
  if (status == "outoftime") return Termination::time_forfeit;
  if (status == "mate" || status == "resign" || status == "stalemate" || status == "draw" ||
      status == "timeout") {
    return Termination::normal;
  }
  return Termination::other;
}

// Outcome for the focal side given an optional winner colour.
Outcome outcome_for(Color focal, std::optional<Color> winner) {
  if (!winner) return Outcome::draw;
  return *winner == focal ? Outcome::win : Outcome::loss;
}

struct LineError {
  std::string reason;
};

std::string user_name(const json& side) {
  if (!side.is_object()) return {};
  const auto user = side.find("user");
  if (user == side.end() || !user->is_object()) return {};
  if (auto name = user->find("name"); name != user->end() && name->is_string()) {
    return name->get<std::string>();
  }
  if (auto id = user->find("id"); id != user->end() && id->is_string()) return id->get<std::string>();
  return {};
}

bool side_matches(const json& side, std::string_view focal) {
  if (!side.is_object()) return false;
  const auto user = side.find("user");
  if (user == side.end() || !user->is_object()) return false;
  for (const char* key : {"name", "id"}) {
    if (auto f = user->find(key); f != user->end() && f->is_string() &&
                                 same_user(f->get_ref<const std::string&>(), focal)) {
      return true;
    }
  }
  return false;
}

std::optional<double> side_rating(const json& side) {
  if (!side.is_object()) return std::nullopt;
  const auto r = side.find("rating");
  if (r == side.end() || !r->is_number()) return std::nullopt;
  return r->get<double>();
}

GameRecord record_from_json(const json& game, std::string_view focal_id) {
  if (!game.is_object()) throw LineError{"not a JSON object"};
  GameRecord rec;
  const auto id = game.find("id");
  if (id == game.end() || !id->is_string()) throw LineError{"missing id"};
  rec.game_id = id->get<std::string>();

  const auto created = game.find("createdAt");
  if (created == game.end() || !created->is_number()) throw LineError{"missing createdAt"};
  rec.start_time = created->get<std::int64_t>() / 1000;

  if (auto rated = game.find("rated"); rated != game.end() && rated->is_boolean()) {
    rec.rated = rated->get<bool>();
  }
  if (auto variant = game.find("variant"); variant != game.end() && variant->is_string()) {
    rec.variant = variant->get_ref<const std::string&>() == "standard" ? Variant::standard : Variant::other;
  }
  if (auto clock = game.find("clock"); clock != game.end() && clock->is_object()) {
    rec.base_seconds = clock->value("initial", 0);
    rec.increment_seconds = clock->value("increment", 0);
  }

  const auto players = game.find("players");
  if (players == game.end() || !players->is_object()) throw LineError{"missing players"};
  const json& white = players->value("white", json::object());
  const json& black = players->value("black", json::object());
  if (side_matches(white, focal_id)) {
    rec.focal_color = Color::white;
  } else if (side_matches(black, focal_id)) {
    rec.focal_color = Color::black;
  } else {
    throw LineError{"focal player absent"};
  }
  const json& focal_side = rec.focal_color == Color::white ? white : black;
  const json& opp_side = rec.focal_color == Color::white ? black : white;
  rec.focal_id = user_name(focal_side);
  const auto focal_rating = side_rating(focal_side);
  const auto opp_rating = side_rating(opp_side);
  if (!focal_rating || !opp_rating) throw LineError{"missing rating"};
  if (*focal_rating <= 0.0 || *opp_rating <= 0.0) throw LineError{"non-positive rating"};
  rec.focal_rating = *focal_rating;
  rec.opponent_rating = *opp_rating;

  std::string status;
  if (auto s = game.find("status"); s != game.end() && s->is_string()) status = s->get<std::string>();
  rec.termination = termination_from_status(status);

  std::optional<Color> winner;
  if (auto w = game.find("winner"); w != game.end() && w->is_string()) {
    const auto& ws = w->get_ref<const std::string&>();
    if (ws == "white") {
      winner = Color::white;
    } else if (ws == "black") {
      winner = Color::black;
    } else {
      throw LineError{"unknown winner '" + ws + "'"};
    }
  }
  rec.outcome = outcome_for(rec.focal_color, winner);
  return rec;
}

}  // namespace

ParseResult parse_ndjson_export(std::istream& in, std::string_view focal_id) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    json game = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (game.is_discarded()) {
      result.rejects.push_back({line_no, "malformed JSON"});
      continue;
    }
    try {
      result.records.push_back(record_from_json(game, focal_id));
    } catch (const LineError& e) {
      result.rejects.push_back({line_no, e.reason});
    } catch (const json::exception& e) {
      result.rejects.push_back({line_no, std::string("bad field: ") + e.what()});
    }
  }
  return result;
}

namespace {

struct PgnGame {
  std::size_t first_line = 0;
  std::map<std::string, std::string, std::less<>> tags;
  bool terminated = false;
};

std::optional<std::pair<std::string, std::string>> parse_tag(std::string_view line) {
  line = io::trim(line);
  if (line.size() < 4 || line.front() != '[' || line.back() != ']') return std::nullopt;
  line = line.substr(1, line.size() - 2);
  const auto space = line.find(' ');
  if (space == std::string_view::npos) return std::nullopt;
  std::string name(line.substr(0, space));
  auto rest = io::trim(line.substr(space + 1));
  if (rest.size() < 2 || rest.front() != '"' || rest.back() != '"') return std::nullopt;
  rest = rest.substr(1, rest.size() - 2);
  std::string value;
  value.reserve(rest.size());
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == '\\' && i + 1 < rest.size()) ++i;
    value.push_back(rest[i]);
  }
  return std::pair{std::move(name), std::move(value)};
}

bool ends_with_result(std::string_view line) {
  line = io::trim(line);
  const auto pos = line.find_last_of(" \t");
  const auto last = pos == std::string_view::npos ? line : line.substr(pos + 1);
  return last == "1-0" || last == "0-1" || last == "1/2-1/2" || last == "*";
}

std::int64_t utc_seconds(std::string_view date, std::string_view time) {
  const auto d = io::split(date, '.');
  const auto t = io::split(time, ':');
  if (d.size() != 3 || t.size() != 3) throw LineError{"bad UTCDate/UTCTime"};
  const auto y = io::parse_int(d[0]);
  const auto mo = io::parse_int(d[1]);
  const auto da = io::parse_int(d[2]);
  const auto h = io::parse_int(t[0]);
  const auto mi = io::parse_int(t[1]);
  const auto s = io::parse_int(t[2]);
  if (!y || !mo || !da || !h || !mi || !s) throw LineError{"bad UTCDate/UTCTime"};
  using namespace std::chrono;
  const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*da)}};
  if (!ymd.ok() || *h < 0 || *h > 23 || *mi < 0 || *mi > 59 || *s < 0 || *s > 60) {
    throw LineError{"bad UTCDate/UTCTime"};
  }
  const auto tp = sys_days{ymd} + hours{*h} + minutes{*mi} + seconds{*s};
  return duration_cast<seconds>(tp.time_since_epoch()).count();
}

GameRecord record_from_pgn(const PgnGame& game, std::string_view focal_id) {
  static constexpr std::string_view kMandatory[] = {"UTCDate", "UTCTime",  "TimeControl",
                                                    "White",   "Black",    "WhiteElo",
                                                    "BlackElo", "Result", "Termination"};
  for (auto tag : kMandatory) {
    if (!game.tags.contains(tag)) throw LineError{"missing tag " + std::string(tag)};
  }
  const auto tag = [&](std::string_view name) -> const std::string& { return game.tags.find(name)->second; };

  GameRecord rec;
  if (auto it = game.tags.find("GameId"); it != game.tags.end() && !it->second.empty()) {
    rec.game_id = it->second;
  } else if (auto site = game.tags.find("Site"); site != game.tags.end() && !site->second.empty()) {
    const auto slash = site->second.find_last_of('/');
    rec.game_id = slash == std::string::npos ? site->second : site->second.substr(slash + 1);
  } else {
    rec.game_id = "pgn-" + std::to_string(game.first_line);
  }
  rec.start_time = utc_seconds(tag("UTCDate"), tag("UTCTime"));

  const std::string& tc = tag("TimeControl");
  if (tc != "-") {
    const auto parts = io::split(tc, '+');
    const auto base = parts.size() == 2 ? io::parse_int(parts[0]) : std::nullopt;
    const auto inc = parts.size() == 2 ? io::parse_int(parts[1]) : std::nullopt;
    if (!base || !inc || *base < 0 || *inc < 0) throw LineError{"bad TimeControl '" + tc + "'"};
    rec.base_seconds = static_cast<int>(*base);
    rec.increment_seconds = static_cast<int>(*inc);
  }

  const auto event = game.tags.find("Event");
  rec.rated = event == game.tags.end() || io::lower(event->second).find("casual") == std::string::npos;
  if (auto v = game.tags.find("Variant"); v != game.tags.end()) {
    rec.variant = io::lower(v->second) == "standard" ? Variant::standard : Variant::other;
  }

  if (same_user(tag("White"), focal_id)) {
    rec.focal_color = Color::white;
    rec.focal_id = tag("White");
  } else if (same_user(tag("Black"), focal_id)) {
    rec.focal_color = Color::black;
    rec.focal_id = tag("Black");
  } else {
    throw LineError{"focal player absent"};
  }
  const auto white_elo = io::parse_double(tag("WhiteElo"));
  const auto black_elo = io::parse_double(tag("BlackElo"));
  if (!white_elo || !black_elo) throw LineError{"missing rating"};
  if (*white_elo <= 0.0 || *black_elo <= 0.0) throw LineError{"non-positive rating"};
  rec.focal_rating = rec.focal_color == Color::white ? *white_elo : *black_elo;
  rec.opponent_rating = rec.focal_color == Color::white ? *black_elo : *white_elo;

  const std::string termination = io::lower(tag("Termination"));
  if (termination == "normal") {
    rec.termination = Termination::normal;
  } else if (termination == "time forfeit") {
    rec.termination = Termination::time_forfeit;
  } else {
    rec.termination = Termination::other;
  }

  const std::string& result = tag("Result");
  if (result == "1-0") {
    rec.outcome = outcome_for(rec.focal_color, Color::white);
  } else if (result == "0-1") {
    rec.outcome = outcome_for(rec.focal_color, Color::black);
  } else if (result == "1/2-1/2") {
    rec.outcome = Outcome::draw;
  } else if (result == "*") {
    rec.outcome = Outcome::draw;
    rec.termination = Termination::other;
  } else {
    throw LineError{"bad Result '" + result + "'"};
  }
  return rec;
}

}  // namespace

ParseResult parse_pgn_export(std::istream& in, std::string_view focal_id) {
  ParseResult result;
  std::optional<PgnGame> current;
  bool in_movetext = false;

  const auto finish = [&](PgnGame& game) {
    if (!game.terminated) {
      result.rejects.push_back({game.first_line, "unterminated game"});
      return;
    }
    try {
      result.records.push_back(record_from_pgn(game, focal_id));
    } catch (const LineError& e) {
      result.rejects.push_back({game.first_line, e.reason});
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = io::trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (current && in_movetext) {
        finish(*current);
        current.reset();
      }
      if (!current) {
        current.emplace();
        current->first_line = line_no;
        in_movetext = false;
      }
      if (auto tag = parse_tag(text)) {
        current->tags.insert_or_assign(std::move(tag->first), std::move(tag->second));
      } else {
        result.rejects.push_back({line_no, "malformed tag line"});
      }
      continue;
    }
    if (!current) {
      result.rejects.push_back({line_no, "movetext without headers"});
      continue;
    }
    in_movetext = true;
    if (ends_with_result(text)) {
      current->terminated = true;
      finish(*current);
      current.reset();
      in_movetext = false;
    }
  }
  if (current) {
    result.rejects.push_back({current->first_line, "unterminated game at EOF"});
  }
  return result;
}

std::vector<GameRecord> filter_games(const std::vector<GameRecord>& records,
                                     std::optional<TimeControlFilter> filter, bool rated_only,
                                     bool standard_only) {
  std::vector<GameRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), [&](const GameRecord& r) {
    if (filter && (r.base_seconds != filter->base_seconds || r.increment_seconds != filter->increment_seconds)) {
      return false;
    }
    if (rated_only && !r.rated) return false;
    if (standard_only && r.variant != Variant::standard) return false;
    return true;
  });
  return out;
}

ParseResult sort_and_dedupe(std::vector<GameRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].start_time < records[b].start_time; });
  ParseResult result;
  result.records.reserve(records.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t idx = order[k];
    if (!result.records.empty() && result.records.back().start_time == records[idx].start_time) {
      result.rejects.push_back({idx + 1, "duplicate start_time " + std::to_string(records[idx].start_time) +
                                             " (game " + records[idx].game_id + ")"});
      continue;
    }
    result.records.push_back(std::move(records[idx]));
  }
  return result;
}

std::vector<GameRecord> drop_abnormal(const std::vector<GameRecord>& records) {
  std::vector<GameRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const GameRecord& r) { return r.termination != Termination::other; });
  return out;
}

namespace {

constexpr std::string_view kCanonicalHeader =
    "game_id\tstart_time\tbase\tinc\trated\tvariant\tfocal_id\tcolor\tfocal_rating\topp_rating\toutcome\ttermination";

template <typename E>
std::optional<E> enum_from(std::string_view text, std::initializer_list<E> values) {
  for (E v : values) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

}  // namespace

void write_canonical(std::ostream& out, const std::vector<GameRecord>& records) {
  out << kCanonicalHeader << '\n';
  for (const auto& r : records) {
    out << r.game_id << '\t' << r.start_time << '\t' << r.base_seconds << '\t' << r.increment_seconds << '\t'
        << (r.rated ? 1 : 0) << '\t' << to_string(r.variant) << '\t' << r.focal_id << '\t'
        << to_string(r.focal_color) << '\t' << io::format_double(r.focal_rating) << '\t'
        << io::format_double(r.opponent_rating) << '\t' << to_string(r.outcome) << '\t'
        << to_string(r.termination) << '\n';
  }
}

ParseResult read_canonical(std::istream& in) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.starts_with("game_id\t")) continue;
    const auto f = io::split(line, '\t');
    if (f.size() != 12) {
      result.rejects.push_back({line_no, "expected 12 fields, got " + std::to_string(f.size())});
      continue;
    }
    GameRecord r;
    r.game_id = std::string(f[0]);
    const auto start = io::parse_int(f[1]);
    const auto base = io::parse_int(f[2]);
    const auto inc = io::parse_int(f[3]);
    const auto rated = io::parse_int(f[4]);
    const auto variant = enum_from<Variant>(f[5], {Variant::standard, Variant::other});
    const auto color = enum_from<Color>(f[7], {Color::white, Color::black});
    const auto focal_rating = io::parse_double(f[8]);
    const auto opp_rating = io::parse_double(f[9]);
    const auto outcome = enum_from<Outcome>(f[10], {Outcome::win, Outcome::loss, Outcome::draw});
    const auto term =
        enum_from<Termination>(f[11], {Termination::normal, Termination::time_forfeit, Termination::other});
    if (!start || !base || !inc || !rated || !variant || !color || !focal_rating || !opp_rating || !outcome ||
        !term) {
      result.rejects.push_back({line_no, "unparseable field"});
      continue;
    }
    r.start_time = *start;
    r.base_seconds = static_cast<int>(*base);
    r.increment_seconds = static_cast<int>(*inc);
    r.rated = *rated != 0;
    r.variant = *variant;
    r.focal_id = std::string(f[6]);
    r.focal_color = *color;
    r.focal_rating = *focal_rating;
    r.opponent_rating = *opp_rating;
    r.outcome = *outcome;
    r.termination = *term;
    result.records.push_back(std::move(r));
  }
  return result;
}

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  for (const auto& r : rejects) out << r.line_no << '\t' << r.reason << '\n';
}

}  // namespace momentum::ingest
