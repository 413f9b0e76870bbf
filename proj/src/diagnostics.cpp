#include "momentum/diagnostics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "momentum/io.hpp"

namespace momentum::diagnostics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shape(const ChainSet& chains, std::size_t min_chains, std::size_t min_iters) {
  if (chains.size() < min_chains) throw std::invalid_argument("diagnostics: need at least 2 chains");
  const std::size_t n = chains.front().size();
  if (n < min_iters) throw std::invalid_argument("diagnostics: need at least 4 iterations per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("diagnostics: chains differ in length");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

ChainSet split_chains(const ChainSet& chains) {
  ChainSet out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

bool all_equal(const ChainSet& chains) {
  const double first = chains.front().front();
  for (const auto& c : chains) {
    for (double x : c) {
      if (x != first) return false;
    }
  }
  return true;
}

// Normal scores of pooled ranks with fractional offset 3/8 (Blom).
ChainSet rank_normalize(const ChainSet& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (const auto& c : chains) {
    for (double x : c) pooled.emplace_back(x, pooled.size());
  }
  const std::size_t S = pooled.size();
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> rank(S);
  for (std::size_t i = 0; i < S;) {
    std::size_t j = i;
    while (j + 1 < S && pooled[j + 1].first == pooled[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = avg;
    i = j + 1;
  }
  const boost::math::normal std_normal;
  ChainSet out = chains;
  std::size_t k = 0;
  for (auto& c : out) {
    for (double& x : c) {
      const double p = (rank[k++] - 0.375) / (static_cast<double>(S) + 0.25);
      x = boost::math::quantile(std_normal, p);
    }
  }
  return out;
}

ChainSet indicator(const ChainSet& chains, double threshold) {
  ChainSet out = chains;
  for (auto& c : out) {
    for (double& x : c) x = x <= threshold ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  if (sorted.size() == 1) return sorted.front();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, prob);
}

double split_rhat(const ChainSet& chains) {
  check_shape(chains, 2, 4);
  const ChainSet halves = split_chains(chains);
  const std::size_t n = halves.front().size();
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    vars.push_back(sample_variance(h));
  }
  const double W = mean_of(vars);
  if (!(W > 0.0)) return kNaN;
  const double B_over_n = sample_variance(means);
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * W + B_over_n;
  return std::sqrt(var_plus / W);
}

double ess_raw(const ChainSet& chains) {
  const std::size_t M = chains.size();
  const std::size_t N = chains.front().size();
  if (M == 0 || N < 4) return kNaN;

  std::vector<double> chain_mean(M), chain_var(M);
  std::vector<std::vector<double>> centered(M);
  for (std::size_t m = 0; m < M; ++m) {
    chain_mean[m] = mean_of(chains[m]);
    centered[m].resize(N);
    for (std::size_t i = 0; i < N; ++i) centered[m][i] = chains[m][i] - chain_mean[m];
    chain_var[m] = sample_variance(chains[m]);
  }
  // Mean over chains of the biased autocovariance at lag t.
  const auto acov_mean = [&](std::size_t t) {
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      double s = 0.0;
      const auto& c = centered[m];
      for (std::size_t i = 0; i + t < N; ++i) s += c[i] * c[i + t];
      total += s / static_cast<double>(N);
    }
    return total / static_cast<double>(M);
  };

  const double mean_var = mean_of(chain_var);
  double var_plus = mean_var * (static_cast<double>(N) - 1.0) / static_cast<double>(N);
  if (M > 1) var_plus += sample_variance(chain_mean);
  if (!(var_plus > 0.0)) return kNaN;

  std::vector<double> rho(N + 1, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
  rho[1] = rho_odd;

  std::size_t t = 1;
  while (t + 5 < N && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov_mean(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov_mean(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0) rho[max_t + 1] = rho_even;

  // Initial monotone sequence.
  for (t = 1; t + 2 <= max_t; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = 0.5 * (rho[t - 1] + rho[t]);
      rho[t + 2] = rho[t + 1];
    }
  }

  const double total = static_cast<double>(M * N);
  double tau = -1.0 + 2.0 * std::accumulate(rho.begin(), rho.begin() + static_cast<std::ptrdiff_t>(max_t + 1), 0.0) +
               rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

Ess effective_sample_size(const ChainSet& chains) {
  check_shape(chains, 1, 4);
  if (all_equal(chains)) return {kNaN, kNaN};
  const ChainSet halves = split_chains(chains);
  Ess out;
  out.bulk = ess_raw(rank_normalize(halves));

  std::vector<double> pooled;
  for (const auto& c : halves) pooled.insert(pooled.end(), c.begin(), c.end());
  std::sort(pooled.begin(), pooled.end());
  const double q05 = quantile_sorted(pooled, 0.05);
  const double q95 = quantile_sorted(pooled, 0.95);
  const double lower = ess_raw(indicator(halves, q05));
  const double upper = ess_raw(indicator(halves, q95));
  out.tail = std::min(lower, upper);
  if (std::isnan(lower) || std::isnan(upper)) out.tail = kNaN;
  return out;
}

std::vector<SummaryRow> summarize(const sampler::PosteriorDraws& draws) {
  std::vector<SummaryRow> rows;
  if (draws.num_chains == 0 || draws.num_iterations == 0) throw std::invalid_argument("summarize: empty draws");
  rows.reserve(draws.num_params());
  for (std::size_t p = 0; p < draws.num_params(); ++p) {
    SummaryRow row;
    row.name = draws.names[p];
    std::vector<double> values = draws.pooled(p);
    row.mean = mean_of(values);
    row.sd = values.size() > 1 ? std::sqrt(sample_variance(values)) : 0.0;
    std::sort(values.begin(), values.end());
    row.q2_5 = quantile_sorted(values, 0.025);
    row.q17 = quantile_sorted(values, 0.17);
    row.q50 = quantile_sorted(values, 0.50);
    row.q83 = quantile_sorted(values, 0.83);
    row.q97_5 = quantile_sorted(values, 0.975);
    const ChainSet chains = draws.parameter(p);
    row.rhat = draws.num_chains >= 2 && draws.num_iterations >= 4 ? split_rhat(chains) : kNaN;
    if (draws.num_iterations >= 4) {
      const Ess ess = effective_sample_size(chains);
      row.ess_bulk = ess.bulk;
      row.ess_tail = ess.tail;
    } else {
      row.ess_bulk = row.ess_tail = kNaN;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double max_rhat(const std::vector<SummaryRow>& rows) {
  double worst = 0.0;
  for (const auto& r : rows) {
    if (std::isnan(r.rhat)) {
      if (r.sd == 0.0) continue;
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, r.rhat);
  }
  return worst;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "name,mean,sd,q2.5,q17,q50,q83,q97.5,rhat,ess_bulk,ess_tail\n";
  for (const auto& r : rows) {
    out += io::join_row({r.name, io::format_double(r.mean), io::format_double(r.sd), io::format_double(r.q2_5),
                         io::format_double(r.q17), io::format_double(r.q50), io::format_double(r.q83),
                         io::format_double(r.q97_5), io::format_double(r.rhat), io::format_double(r.ess_bulk),
                         io::format_double(r.ess_tail)});
  }
  return out;
}

std::vector<SummaryRow> read_summary_csv(const std::string& text) {
  std::vector<SummaryRow> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split(line, ',');
    if (f.size() != 11) throw std::runtime_error("summary csv: expected 11 columns");
    const auto num = [&](std::size_t i) {
      const auto v = io::parse_double(f[i]);
      if (!v) throw std::runtime_error("summary csv: bad number '" + std::string(f[i]) + "'");
      return *v;
    };
    rows.push_back({std::string(f[0]), num(1), num(2), num(3), num(4), num(5), num(6), num(7), num(8), num(9),
                    num(10)});
  }
  return rows;
}

}  // namespace momentum::diagnostics
