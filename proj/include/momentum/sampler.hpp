#pragma once

// No-U-turn Hamiltonian Monte Carlo with multinomial trajectory sampling,
// dual-averaging step-size adaptation and a windowed diagonal metric.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace momentum::sampler {

struct SamplerConfig {
  int chains = 4;
  int warmup_iters = 1000;
  int sampling_iters = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 20240101;
  double max_delta_h = 1000.0;  // divergence threshold in energy units
  double init_radius = 2.0;     // inits uniform in [-r, r] in starting-metric units
  bool parallel_chains = true;
};

/// Log density and gradient on the unconstrained scale. Must be thread-safe.
using LogDensityFn = std::function<double(std::span<const double> q, std::span<double> grad)>;

/// Maps an unconstrained point to the quantities stored in the draws.
using TransformFn = std::function<void(std::span<const double> q, std::vector<double>& out)>;

struct Target {
  LogDensityFn log_density;
  std::size_t dim = 0;
  std::vector<std::string> names;  // one per stored column
  TransformFn transform;           // identity when empty
  /// Starting diagonal inverse metric for warmup; identity when empty. The
  /// initialization box is scaled by its square root.
  std::vector<double> initial_inv_metric;
};

/// chains x iterations x parameters, constrained scale, row-major per chain.
struct PosteriorDraws {
  std::size_t num_chains = 0;
  std::size_t num_iterations = 0;
  std::vector<std::string> names;
  std::vector<double> values;

  std::vector<std::vector<std::uint8_t>> divergent;  // [chain][iteration]
  std::vector<std::vector<int>> tree_depth;
  std::vector<std::vector<int>> n_leapfrog;
  std::vector<std::vector<double>> accept_stat;
  std::vector<std::vector<double>> energy;
  std::vector<double> step_size;                   // adapted, per chain
  std::vector<std::vector<double>> inv_metric;     // adapted diagonal, per chain
  std::vector<std::string> warnings;

  std::size_t num_params() const noexcept { return names.size(); }
  double at(std::size_t chain, std::size_t iter, std::size_t param) const {
    return values[(chain * num_iterations + iter) * names.size() + param];
  }
  double& at(std::size_t chain, std::size_t iter, std::size_t param) {
    return values[(chain * num_iterations + iter) * names.size() + param];
  }
  /// Draws of one parameter split by chain.
  std::vector<std::vector<double>> parameter(std::size_t param) const;
  /// All draws of one parameter, chains concatenated.
  std::vector<double> pooled(std::size_t param) const;
  std::size_t index_of(const std::string& name) const;
  std::size_t divergence_count() const noexcept;
};

/// splitmix64 finalizer; used to derive independent per-chain and per-job seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

using Rng = std::mt19937_64;

/// Runs config.chains independent chains. Throws std::runtime_error when no
/// finite initialization can be found.
PosteriorDraws sample(const Target& target, const SamplerConfig& config);

/// One chain's draws as CSV, one column per stored parameter.
std::string chain_csv(const PosteriorDraws& draws, std::size_t chain);
/// Per-iteration sampler state of one chain:
/// accept_stat,tree_depth,n_leapfrog,divergent,energy.
std::string chain_diagnostics_csv(const PosteriorDraws& draws, std::size_t chain);
/// Rebuilds names and values from chain CSVs written by chain_csv. Throws
/// std::runtime_error on ragged or mismatched input.
PosteriorDraws read_chain_csvs(const std::vector<std::string>& texts);

/// Warmup schedule in iterations: initial fast buffer, first slow window,
/// terminal fast buffer. Scaled from 75/25/50 at 1000 warmup iterations.
struct WarmupSchedule {
  int init_buffer = 75;
  int base_window = 25;
  int term_buffer = 50;
};
WarmupSchedule warmup_schedule(int warmup_iters) noexcept;

/// Dual-averaging step-size adaptation.
class StepSizeAdapter {
 public:
  explicit StepSizeAdapter(double target_accept, double gamma = 0.05, double t0 = 10.0, double kappa = 0.75)
      : delta_(target_accept), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  void restart(double step_size) noexcept;
  /// Returns the next step size given the last transition's acceptance statistic.
  double learn(double accept_stat) noexcept;
  double final_step_size() const noexcept;

 private:
  double delta_, gamma_, t0_, kappa_;
  double mu_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double counter_ = 0.0;
};

}  // namespace momentum::sampler
