#pragma once

// Client for the per-user game export endpoint.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace momentum::cli {

struct FetchOptions {
  std::string base_url = "https://lichess.org";
  std::string username;
  std::optional<std::int64_t> since_ms;
  std::string perf_type;
  int max_retries = 5;
  int backoff_ms = 1000;
  int timeout_s = 60;
};

struct FetchResult {
  std::size_t bytes = 0;
  int attempts = 0;
};

/// GET {base_url}/api/games/user/{username} with an NDJSON Accept header.
/// Writes the body verbatim, appending when `append` is set. Rate-limit
/// responses (429) and connection failures are retried with exponential
/// backoff. Throws HttpError when retries run out or on other statuses.
FetchResult fetch_games(const FetchOptions& options, const std::filesystem::path& output, bool append);

/// Latest `createdAt` among the NDJSON lines of an existing export.
std::optional<std::int64_t> latest_created_at(const std::filesystem::path& path);

}  // namespace momentum::cli
