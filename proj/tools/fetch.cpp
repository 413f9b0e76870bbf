#include <httplib.h>

#include "fetch.hpp"

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "cli_config.hpp"

namespace momentum::cli {

FetchResult fetch_games(const FetchOptions& options, const std::filesystem::path& output, bool append) {
  if (options.username.empty()) throw UsageError("fetch: username is required");
  httplib::Client client(options.base_url);
  if (!client.is_valid()) throw UsageError("fetch: unsupported base_url '" + options.base_url + "'");
  client.set_read_timeout(options.timeout_s, 0);
  client.set_follow_location(true);

  httplib::Params params;
  if (options.since_ms) params.emplace("since", std::to_string(*options.since_ms));
  if (!options.perf_type.empty()) params.emplace("perfType", options.perf_type);
  const std::string path = httplib::append_query_params("/api/games/user/" + options.username, params);
  const httplib::Headers headers = {{"Accept", "application/x-ndjson"}};

  FetchResult result;
  int delay_ms = options.backoff_ms;
  for (;;) {
    ++result.attempts;
    const auto res = client.Get(path, headers);
    const bool retryable = !res || res->status == 429;
    if (!retryable) {
      if (res->status != 200) {
        throw HttpError("fetch: HTTP " + std::to_string(res->status) + " for " + path);
      }
      if (!output.parent_path().empty()) std::filesystem::create_directories(output.parent_path());
      std::ofstream out(output, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
      if (!out) throw std::runtime_error("fetch: cannot write " + output.string());
      out << res->body;
      result.bytes = res->body.size();
      return result;
    }
    if (result.attempts > options.max_retries) {
      throw HttpError(res ? "fetch: still rate limited after " + std::to_string(result.attempts) + " attempts"
                          : "fetch: connection failed: " + httplib::to_string(res.error()));
    }
    int wait = delay_ms;
    if (res && res->has_header("Retry-After")) {
      const auto seconds = std::atoi(res->get_header_value("Retry-After").c_str());
      if (seconds > 0) wait = std::max(wait, seconds * 1000);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(wait));
    delay_ms *= 2;
  }
}

std::optional<std::int64_t> latest_created_at(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::optional<std::int64_t> latest;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("createdAt") || !j["createdAt"].is_number_integer()) {
      continue;
    }
    const auto t = j["createdAt"].get<std::int64_t>();
    if (!latest || t > *latest) latest = t;
  }
  return latest;
}

}  // namespace momentum::cli
