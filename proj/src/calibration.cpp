#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <json.hpp>
#include <stdexcept>

#include "momentum/diagnostics.hpp"
#include "momentum/fit.hpp"
#include "momentum/io.hpp"
#include "momentum/validate.hpp"

namespace momentum::validate {

namespace {

using nlohmann::json;

// NaN and infinities become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

const RecoveryRow& RecoveryReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw std::out_of_range("recovery report has no parameter " + name);
}

RecoveryReport parameter_recovery(const SyntheticSpec& spec, const sampler::SamplerConfig& fit_config,
                                  const model::ModelOptions& options) {
  const SyntheticData sim = simulate_synthetic(spec);
  const sampler::PosteriorDraws draws = fit::fit_model(sim.dataset, fit_config, options);
  const auto summary = diagnostics::summarize(draws);
  const std::vector<double> truth = model::flatten(sim.truth);

  RecoveryReport report;
  report.seed = spec.seed;
  report.divergences = draws.divergence_count();
  report.warnings = draws.warnings;
  report.max_rhat = diagnostics::max_rhat(summary);
  report.flagged = !(report.max_rhat <= kRhatGate);
  for (std::size_t p = 0; p < summary.size(); ++p) {
    const auto& s = summary[p];
    report.rows.push_back({s.name, truth[p], s.mean, s.q2_5, s.q97_5, s.q2_5 <= truth[p] && truth[p] <= s.q97_5,
                           s.rhat, s.ess_bulk});
  }
  return report;
}

std::string recovery_json(const std::vector<RecoveryReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    json rows = json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"name", row.name},
                      {"truth", number(row.truth)},
                      {"mean", number(row.mean)},
                      {"q2.5", number(row.q2_5)},
                      {"q97.5", number(row.q97_5)},
                      {"covered", row.covered},
                      {"rhat", number(row.rhat)},
                      {"ess_bulk", number(row.ess_bulk)}});
    }
    out.push_back({{"seed", r.seed},
                   {"max_rhat", number(r.max_rhat)},
                   {"divergences", r.divergences},
                   {"flagged", r.flagged},
                   {"warnings", r.warnings},
                   {"parameters", rows}});
  }
  return out.dump(2) + "\n";
}

std::string recovery_csv(const std::vector<RecoveryReport>& reports) {
  std::string out = "seed,name,truth,mean,q2.5,q97.5,covered,rhat,ess_bulk\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out += io::join_row({std::to_string(r.seed), row.name, io::format_double(row.truth),
                           io::format_double(row.mean), io::format_double(row.q2_5), io::format_double(row.q97_5),
                           row.covered ? "1" : "0", io::format_double(row.rhat), io::format_double(row.ess_bulk)});
    }
  }
  return out;
}

std::pair<double, double> rank_uniformity(const std::vector<int>& ranks, int max_rank, std::size_t bins,
                                          std::vector<int>* histogram) {
  if (bins < 2) throw std::invalid_argument("rank_uniformity: need at least 2 bins");
  if (ranks.empty()) throw std::invalid_argument("rank_uniformity: no ranks");
  const auto levels = static_cast<std::size_t>(max_rank) + 1;
  std::vector<int> counts(bins, 0);
  for (int r : ranks) {
    if (r < 0 || r > max_rank) throw std::out_of_range("rank_uniformity: rank outside [0, max_rank]");
    ++counts[static_cast<std::size_t>(r) * bins / levels];
  }
  // Expected mass per bin follows the number of rank levels it holds.
  double chi2 = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t first = (b * levels + bins - 1) / bins;
    const std::size_t last = ((b + 1) * levels + bins - 1) / bins;
    const double expected =
        static_cast<double>(ranks.size()) * static_cast<double>(last - first) / static_cast<double>(levels);
    const double d = counts[b] - expected;
    chi2 += d * d / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(bins - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  if (histogram) *histogram = std::move(counts);
  return {chi2, p};
}

SbcReport sbc_ranks(const SbcConfig& config, const SyntheticSpec& template_spec,
                    const sampler::SamplerConfig& fit_config, const model::ModelOptions& options) {
  if (config.replications < 20) throw std::invalid_argument("sbc_ranks: need at least 20 replications");
  if (config.thinned_draws < 1) throw std::invalid_argument("sbc_ranks: thinned_draws must be positive");
  const std::vector<std::string> names = model::parameter_names(template_spec.num_players);
  std::vector<std::size_t> columns;
  SbcReport report;
  report.thinned_draws = config.thinned_draws;
  for (const auto& name : config.parameters) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("sbc_ranks: unknown parameter " + name);
    columns.push_back(static_cast<std::size_t>(it - names.begin()));
    report.parameters.push_back({name, {}, {}, 0.0, 1.0});
  }

  model::ModelOptions fit_options = options;
  fit_options.negate_history = config.negative_control;

  for (std::size_t rep = 0; rep < config.replications; ++rep) {
    const std::uint64_t seed = sampler::derive_seed(config.seed, rep);
    std::mt19937_64 rng(seed);
    SyntheticSpec spec = template_spec;
    spec.truth = draw_from_prior(rng, options);
    spec.seed = sampler::splitmix64(seed);
    sampler::SamplerConfig cfg = fit_config;
    cfg.seed = sampler::derive_seed(seed, 1);

    std::vector<double> truth;
    sampler::PosteriorDraws draws;
    try {
      const SyntheticData sim = simulate_synthetic(spec);
      truth = model::flatten(sim.truth);
      draws = fit::fit_model(sim.dataset, cfg, fit_options);
    } catch (const std::exception&) {
      ++report.failed;
      continue;
    }
    ++report.replications;
    const std::size_t total = draws.num_chains * draws.num_iterations;
    const std::size_t L = config.thinned_draws;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const std::vector<double> pooled = draws.pooled(columns[k]);
      int rank = 0;
      for (std::size_t t = 0; t < L; ++t) {
        const std::size_t idx = t * total / L;
        if (pooled[idx] < truth[columns[k]]) ++rank;
      }
      report.parameters[k].ranks.push_back(rank);
    }
  }
  if (report.replications == 0) throw std::runtime_error("sbc_ranks: every replication failed");
  for (auto& p : report.parameters) {
    const auto [chi2, pv] =
        rank_uniformity(p.ranks, static_cast<int>(config.thinned_draws), config.bins, &p.histogram);
    p.chi_square = chi2;
    p.p_value = pv;
  }
  return report;
}

std::string sbc_json(const SbcReport& report) {
  json params = json::array();
  for (const auto& p : report.parameters) {
    params.push_back({{"name", p.name},
                      {"histogram", p.histogram},
                      {"chi_square", number(p.chi_square)},
                      {"p_value", number(p.p_value)}});
  }
  json out = {{"replications", report.replications},
              {"failed", report.failed},
              {"thinned_draws", report.thinned_draws},
              {"parameters", params}};
  return out.dump(2) + "\n";
}

std::string sbc_csv(const SbcReport& report) {
  std::string out = "parameter,replication,rank\n";
  for (const auto& p : report.parameters) {
    for (std::size_t i = 0; i < p.ranks.size(); ++i) {
      out += io::join_row({p.name, std::to_string(i + 1), std::to_string(p.ranks[i])});
    }
  }
  return out;
}

}  // namespace momentum::validate
