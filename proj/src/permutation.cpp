#include <algorithm>
#include <json.hpp>
#include <stdexcept>

#include "momentum/diagnostics.hpp"
#include "momentum/fit.hpp"
#include "momentum/io.hpp"
#include "momentum/validate.hpp"

namespace momentum::validate {

sampler::SamplerConfig reduced_budget(std::uint64_t seed) {
  sampler::SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup_iters = 500;
  cfg.sampling_iters = 500;
  cfg.seed = seed;
  return cfg;
}

Dataset permute_outcomes(const Dataset& data, std::mt19937_64& rng) {
  if (data.streams.size() != data.num_players()) {
    throw std::invalid_argument("permute_outcomes: dataset carries no per-player streams");
  }
  std::vector<features::PlayerStream> streams = data.streams;
  for (auto& s : streams) std::shuffle(s.won.begin(), s.won.end(), rng);
  return features::dataset_from_streams(std::move(streams), data.player_ids, data.n);
}

PermutationReport permutation_test(const Dataset& data, int replicates, const sampler::SamplerConfig& fit_config,
                                   std::uint64_t seed, const model::ModelOptions& options) {
  if (replicates < 1) throw std::invalid_argument("permutation_test: need at least one replicate");
  PermutationReport report;
  report.seed = seed;
  const auto names = model::parameter_names(data.num_players());

  const auto observed = diagnostics::summarize(fit::fit_model(data, fit_config, options));
  report.results.resize(names.size());
  for (std::size_t p = 0; p < names.size(); ++p) {
    report.results[p].parameter = names[p];
    report.results[p].true_posterior_mean = observed[p].mean;
  }

  for (int b = 0; b < replicates; ++b) {
    std::mt19937_64 rng(sampler::derive_seed(seed, static_cast<std::uint64_t>(b)));
    const Dataset permuted = permute_outcomes(data, rng);
    sampler::SamplerConfig cfg = fit_config;
    cfg.seed = sampler::derive_seed(fit_config.seed, static_cast<std::uint64_t>(b) + 1);
    ++report.replicates;
    std::vector<diagnostics::SummaryRow> summary;
    try {
      summary = diagnostics::summarize(fit::fit_model(permuted, cfg, options));
    } catch (const std::exception&) {
      ++report.excluded;
      continue;
    }
    if (!(diagnostics::max_rhat(summary) <= kReplicateRhatGate)) {
      ++report.excluded;
      continue;
    }
    for (std::size_t p = 0; p < names.size(); ++p) report.results[p].null_means.push_back(summary[p].mean);
  }

  for (auto& r : report.results) {
    if (r.null_means.empty()) continue;
    std::vector<double> sorted = r.null_means;
    std::sort(sorted.begin(), sorted.end());
    r.interval66 = {diagnostics::quantile_sorted(sorted, 0.17), diagnostics::quantile_sorted(sorted, 0.83)};
    r.interval95 = {diagnostics::quantile_sorted(sorted, 0.025), diagnostics::quantile_sorted(sorted, 0.975)};
  }
  return report;
}

std::string permutation_csv(const PermutationReport& report) {
  std::vector<std::string> header{"replicate"};
  for (const auto& r : report.results) header.push_back(r.parameter);
  std::string out = io::join_row(header);
  const std::size_t rows = report.results.empty() ? 0 : report.results.front().null_means.size();
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::string> cells{std::to_string(i + 1)};
    for (const auto& r : report.results) cells.push_back(io::format_double(r.null_means[i]));
    out += io::join_row(cells);
  }
  return out;
}

std::string permutation_json(const PermutationReport& report) {
  using nlohmann::json;
  json params = json::array();
  for (const auto& r : report.results) {
    json entry = {{"name", r.parameter}, {"true_posterior_mean", r.true_posterior_mean}};
    if (!r.null_means.empty()) {
      entry["interval66"] = {r.interval66.first, r.interval66.second};
      entry["interval95"] = {r.interval95.first, r.interval95.second};
    }
    params.push_back(entry);
  }
  json out = {{"seed", report.seed},
              {"replicates", report.replicates},
              {"excluded", report.excluded},
              {"parameters", params}};
  return out.dump(2) + "\n";
}

}  // namespace momentum::validate
