#pragma once

// Convergence diagnostics and posterior summaries.

#include <span>
#include <string>
#include <vector>

#include "momentum/sampler.hpp"

namespace momentum::diagnostics {

/// Draws of one parameter, one inner vector per chain (equal lengths).
using ChainSet = std::vector<std::vector<double>>;

/// Split-chain potential scale reduction factor. Each chain is halved and the
/// classic between/within variance ratio is computed over the halves. Returns
/// NaN when the within-chain variance is zero. Throws std::invalid_argument
/// for fewer than 2 chains or fewer than 4 iterations.
double split_rhat(const ChainSet& chains);

struct Ess {
  double bulk = 0.0;
  double tail = 0.0;
};

/// Multi-chain effective sample size of already-split input (no further
/// splitting), autocorrelations combined across chains and truncated with
/// Geyer's initial monotone sequence.
double ess_raw(const ChainSet& chains);

/// Bulk ESS on rank-normalized split chains; tail ESS is the minimum over the
/// 5% and 95% quantile indicator transforms. NaN on degenerate variance.
Ess effective_sample_size(const ChainSet& chains);

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double prob);
double quantile_sorted(std::span<const double> sorted, double prob);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q2_5 = 0.0;
  double q17 = 0.0;
  double q50 = 0.0;
  double q83 = 0.0;
  double q97_5 = 0.0;
  double rhat = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
};

std::vector<SummaryRow> summarize(const sampler::PosteriorDraws& draws);

/// Largest finite R-hat over all rows; NaN rows count as failures and make
/// the result +inf unless the parameter is constant across every draw.
double max_rhat(const std::vector<SummaryRow>& rows);

/// CSV with columns name,mean,sd,q2.5,q17,q50,q83,q97.5,rhat,ess_bulk,ess_tail.
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::string& text);

}  // namespace momentum::diagnostics
