#include "momentum/sampler.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "momentum/io.hpp"

namespace momentum::sampler {

using Eigen::VectorXd;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed + splitmix64(stream));
}

std::vector<std::vector<double>> PosteriorDraws::parameter(std::size_t param) const {
  std::vector<std::vector<double>> out(num_chains, std::vector<double>(num_iterations));
  for (std::size_t c = 0; c < num_chains; ++c) {
    for (std::size_t i = 0; i < num_iterations; ++i) out[c][i] = at(c, i, param);
  }
  return out;
}

std::vector<double> PosteriorDraws::pooled(std::size_t param) const {
  std::vector<double> out;
  out.reserve(num_chains * num_iterations);
  for (std::size_t c = 0; c < num_chains; ++c) {
    for (std::size_t i = 0; i < num_iterations; ++i) out.push_back(at(c, i, param));
  }
  return out;
}

std::size_t PosteriorDraws::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no parameter named " + name);
  return static_cast<std::size_t>(it - names.begin());
}

std::size_t PosteriorDraws::divergence_count() const noexcept {
  std::size_t n = 0;
  for (const auto& chain : divergent) n += static_cast<std::size_t>(std::count(chain.begin(), chain.end(), 1));
  return n;
}

WarmupSchedule warmup_schedule(int warmup_iters) noexcept {
  WarmupSchedule s;
  if (warmup_iters == 1000) return s;
  const double scale = warmup_iters / 1000.0;
  s.init_buffer = std::max(1, static_cast<int>(std::lround(75 * scale)));
  s.base_window = std::max(1, static_cast<int>(std::lround(25 * scale)));
  s.term_buffer = std::max(1, static_cast<int>(std::lround(50 * scale)));
  if (s.init_buffer + s.base_window + s.term_buffer > warmup_iters) {
    s.init_buffer = static_cast<int>(0.15 * warmup_iters);
    s.term_buffer = static_cast<int>(0.1 * warmup_iters);
    s.base_window = warmup_iters - s.init_buffer - s.term_buffer;
  }
  return s;
}

void StepSizeAdapter::restart(double step_size) noexcept {
  mu_ = std::log(10.0 * step_size);
  s_bar_ = 0.0;
  x_bar_ = 0.0;
  counter_ = 0.0;
}

double StepSizeAdapter::learn(double accept_stat) noexcept {
  counter_ += 1.0;
  accept_stat = std::min(accept_stat, 1.0);
  const double eta = 1.0 / (counter_ + t0_);
  s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
  const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
  const double x_eta = std::pow(counter_, -kappa_);
  x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
  return std::exp(x);
}

double StepSizeAdapter::final_step_size() const noexcept { return std::exp(x_bar_); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) noexcept {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  VectorXd q, p, grad;
  double log_density = 0.0;
};

class MetricAdapter {
 public:
  MetricAdapter(int warmup, std::size_t dim) : warmup_(warmup), enabled_(warmup >= 20) {
    const WarmupSchedule s = warmup_schedule(warmup);
    init_ = s.init_buffer;
    term_ = s.term_buffer;
    base_ = s.base_window;
    window_size_ = base_;
    next_window_ = init_ + window_size_ - 1;
    mean_ = VectorXd::Zero(static_cast<Eigen::Index>(dim));
    m2_ = VectorXd::Zero(static_cast<Eigen::Index>(dim));
  }

  // Returns true when a slow window closed and `inv_metric` was updated.
  bool learn(VectorXd& inv_metric, const VectorXd& q) {
    if (!enabled_) return false;
    if (in_window()) add(q);
    if (end_window()) {
      compute_next_window();
      const double n = static_cast<double>(count_);
      VectorXd var = m2_ / (n - 1.0);
      // Shrink toward 1e-3 on the parameter's own scale (capped at 1) so that
      // coordinates with tiny posterior variance keep a usable metric.
      const VectorXd floor = 1e-3 * var.array().min(1.0).max(1e-12);
      inv_metric = (n / (n + 5.0)) * var.array() + (5.0 / (n + 5.0)) * floor.array();
      count_ = 0;
      mean_.setZero();
      m2_.setZero();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  bool in_window() const { return counter_ >= init_ && counter_ < warmup_ - term_ && counter_ != warmup_; }
  bool end_window() const { return counter_ == next_window_ && counter_ != warmup_; }

  void compute_next_window() {
    if (next_window_ == warmup_ - term_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != warmup_ - term_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= warmup_ - term_) next_window_ = warmup_ - term_ - 1;
    }
  }

  void add(const VectorXd& q) {
    ++count_;
    const VectorXd delta = q - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  int warmup_;
  bool enabled_;
  int init_ = 0, term_ = 0, base_ = 0;
  int counter_ = 0;
  int window_size_ = 0;
  int next_window_ = 0;
  long count_ = 0;
  VectorXd mean_, m2_;
};

struct TransitionInfo {
  double accept_stat = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
  double energy = 0.0;
};

class Chain {
 public:
  Chain(const Target& target, const SamplerConfig& config, std::uint64_t seed)
      : target_(target), config_(config), rng_(seed), dim_(static_cast<Eigen::Index>(target.dim)) {
    inv_metric_ = VectorXd::Ones(dim_);
    if (!target_.initial_inv_metric.empty()) {
      inv_metric_ = Eigen::Map<const VectorXd>(target_.initial_inv_metric.data(), dim_);
    }
    z_.q.resize(dim_);
    z_.p.resize(dim_);
    z_.grad.resize(dim_);
  }

  void initialize() {
    std::uniform_real_distribution<double> init(-config_.init_radius, config_.init_radius);
    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      // The box is measured in units of the starting metric's scales.
      for (Eigen::Index i = 0; i < dim_; ++i) z_.q[i] = init(rng_) * std::sqrt(inv_metric_[i]);
      evaluate(z_);
      if (std::isfinite(z_.log_density) && z_.grad.allFinite()) return;
    }
    throw std::runtime_error("sampler: no finite log density found in " + std::to_string(kMaxAttempts) +
                             " random initializations in [-" + std::to_string(config_.init_radius) + ", " +
                             std::to_string(config_.init_radius) + "]");
  }

  void run(PosteriorDraws& draws, std::size_t chain) {
    initialize();
    StepSizeAdapter stepsize(config_.target_accept);
    MetricAdapter metric(config_.warmup_iters, target_.dim);
    epsilon_ = 1.0;
    if (config_.warmup_iters > 0) {
      init_stepsize();
      stepsize.restart(epsilon_);
    }
    for (int it = 0; it < config_.warmup_iters; ++it) {
      const TransitionInfo info = transition();
      epsilon_ = stepsize.learn(info.accept_stat);
      if (metric.learn(inv_metric_, z_.q)) {
        init_stepsize();
        stepsize.restart(epsilon_);
      }
    }
    if (config_.warmup_iters > 0) epsilon_ = stepsize.final_step_size();

    const std::size_t iters = draws.num_iterations;
    std::vector<double> row;
    for (std::size_t it = 0; it < iters; ++it) {
      const TransitionInfo info = transition();
      if (target_.transform) {
        target_.transform(std::span<const double>(z_.q.data(), target_.dim), row);
      } else {
        row.assign(z_.q.data(), z_.q.data() + dim_);
      }
      std::copy(row.begin(), row.end(), &draws.at(chain, it, 0));
      draws.divergent[chain][it] = info.divergent ? 1 : 0;
      draws.tree_depth[chain][it] = info.depth;
      draws.n_leapfrog[chain][it] = info.n_leapfrog;
      draws.accept_stat[chain][it] = info.accept_stat;
      draws.energy[chain][it] = info.energy;
    }
    draws.step_size[chain] = epsilon_;
    draws.inv_metric[chain].assign(inv_metric_.data(), inv_metric_.data() + dim_);
  }

 private:
  void evaluate(PhasePoint& z) const {
    z.log_density = target_.log_density(std::span<const double>(z.q.data(), target_.dim),
                                        std::span<double>(z.grad.data(), target_.dim));
    if (std::isnan(z.log_density)) z.log_density = -kInf;
  }

  double hamiltonian(const PhasePoint& z) const {
    const double kinetic = 0.5 * z.p.cwiseProduct(inv_metric_).dot(z.p);
    const double h = -z.log_density + kinetic;
    return std::isnan(h) ? kInf : h;
  }

  VectorXd p_sharp(const PhasePoint& z) const { return inv_metric_.cwiseProduct(z.p); }

  void sample_momentum(PhasePoint& z) {
    for (Eigen::Index i = 0; i < dim_; ++i) z.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  void leapfrog(PhasePoint& z, double eps) const {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    evaluate(z);
    z.p += 0.5 * eps * z.grad;
  }

  double uniform() { return uniform_(rng_); }

  void init_stepsize() {
    const PhasePoint start = z_;
    sample_momentum(z_);
    double h0 = hamiltonian(z_);
    leapfrog(z_, epsilon_);
    double delta_h = h0 - hamiltonian(z_);
    const int direction = delta_h > std::log(0.8) ? 1 : -1;
    for (int guard = 0; guard < 200; ++guard) {
      z_ = start;
      sample_momentum(z_);
      h0 = hamiltonian(z_);
      leapfrog(z_, epsilon_);
      delta_h = h0 - hamiltonian(z_);
      if (direction == 1 && !(delta_h > std::log(0.8))) break;
      if (direction == -1 && !(delta_h < std::log(0.8))) break;
      epsilon_ = direction == 1 ? 2.0 * epsilon_ : 0.5 * epsilon_;
      if (epsilon_ > 1e7) throw std::runtime_error("sampler: step size diverged; posterior may be improper");
      if (epsilon_ == 0.0) throw std::runtime_error("sampler: step size collapsed to zero");
    }
    z_ = start;
  }

  static bool no_uturn(const VectorXd& p_sharp_minus, const VectorXd& p_sharp_plus, const VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  bool build_tree(int depth, PhasePoint& z_propose, VectorXd& p_sharp_beg, VectorXd& p_sharp_end, VectorXd& rho,
                  VectorXd& p_beg, VectorXd& p_end, double h0, double sign, int& n_leapfrog,
                  double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z_, sign * epsilon_);
      ++n_leapfrog;
      const double h = hamiltonian(z_);
      if (h - h0 > config_.max_delta_h) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      z_propose = z_;
      p_sharp_beg = p_sharp(z_);
      p_sharp_end = p_sharp_beg;
      rho += z_.p;
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }

    double log_sum_weight_init = -kInf;
    VectorXd p_init_end(dim_), p_sharp_init_end(dim_);
    VectorXd rho_init = VectorXd::Zero(dim_);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, h0, sign,
                    n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    PhasePoint z_propose_final = z_;
    double log_sum_weight_final = -kInf;
    VectorXd p_final_beg(dim_), p_sharp_final_beg(dim_);
    VectorXd rho_final = VectorXd::Zero(dim_);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end, h0,
                    sign, n_leapfrog, log_sum_weight_final, sum_metro_prob)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = no_uturn(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && no_uturn(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && no_uturn(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  TransitionInfo transition() {
    sample_momentum(z_);
    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;

    VectorXd p_fwd_fwd = z_.p;
    VectorXd p_sharp_fwd_fwd = p_sharp(z_);
    VectorXd p_fwd_bck = z_.p;
    VectorXd p_sharp_fwd_bck = p_sharp_fwd_fwd;
    VectorXd p_bck_fwd = z_.p;
    VectorXd p_sharp_bck_fwd = p_sharp_fwd_fwd;
    VectorXd p_bck_bck = z_.p;
    VectorXd p_sharp_bck_bck = p_sharp_fwd_fwd;
    VectorXd rho = z_.p;

    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    int depth = 0;
    divergent_ = false;

    while (depth < config_.max_tree_depth) {
      VectorXd rho_fwd = VectorXd::Zero(dim_);
      VectorXd rho_bck = VectorXd::Zero(dim_);
      bool valid = false;
      double log_sum_weight_subtree = -kInf;

      if (uniform() > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd, h0,
                           1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd, p_bck_bck, h0,
                           -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_bck = z_;
      }
      if (!valid) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_uturn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && no_uturn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && no_uturn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    TransitionInfo info;
    info.depth = depth;
    info.n_leapfrog = n_leapfrog;
    info.divergent = divergent_;
    info.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
    z_ = z_sample;
    info.energy = hamiltonian(z_);
    return info;
  }

  const Target& target_;
  const SamplerConfig& config_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  Eigen::Index dim_;
  VectorXd inv_metric_;
  double epsilon_ = 1.0;
  bool divergent_ = false;
  PhasePoint z_;
};

}  // namespace

PosteriorDraws sample(const Target& target, const SamplerConfig& config) {
  if (target.dim == 0) throw std::invalid_argument("sample: dimension must be positive");
  if (config.chains < 1 || config.sampling_iters < 1 || config.warmup_iters < 0) {
    throw std::invalid_argument("sample: chains and sampling_iters must be positive");
  }
  if (!(config.target_accept > 0.0 && config.target_accept < 1.0)) {
    throw std::invalid_argument("sample: target_accept must lie in (0, 1)");
  }
  if (config.max_tree_depth < 1) throw std::invalid_argument("sample: max_tree_depth must be positive");

  PosteriorDraws draws;
  draws.num_chains = static_cast<std::size_t>(config.chains);
  draws.num_iterations = static_cast<std::size_t>(config.sampling_iters);
  if (!target.names.empty()) {
    draws.names = target.names;
  } else {
    for (std::size_t i = 0; i < target.dim; ++i) draws.names.push_back("q[" + std::to_string(i + 1) + "]");
  }
  if (!target.transform && draws.names.size() != target.dim) {
    throw std::invalid_argument("sample: names must match the dimension when no transform is given");
  }
  draws.values.assign(draws.num_chains * draws.num_iterations * draws.names.size(), 0.0);
  const auto per_chain = [&](auto init) {
    return std::vector<std::remove_cvref_t<decltype(init)>>(draws.num_chains,
                                                           decltype(init)(draws.num_iterations));
  };
  draws.divergent = per_chain(std::vector<std::uint8_t>{});
  draws.tree_depth = per_chain(std::vector<int>{});
  draws.n_leapfrog = per_chain(std::vector<int>{});
  draws.accept_stat = per_chain(std::vector<double>{});
  draws.energy = per_chain(std::vector<double>{});
  draws.step_size.assign(draws.num_chains, 0.0);
  draws.inv_metric.assign(draws.num_chains, {});

  std::vector<std::exception_ptr> errors(draws.num_chains);
  const auto run_chain = [&](std::size_t c) {
    try {
      Chain chain(target, config, derive_seed(config.seed, c));
      chain.run(draws, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel_chains && draws.num_chains > 1) {
    std::vector<std::jthread> threads;
    threads.reserve(draws.num_chains);
    for (std::size_t c = 0; c < draws.num_chains; ++c) threads.emplace_back(run_chain, c);
  } else {
    for (std::size_t c = 0; c < draws.num_chains; ++c) run_chain(c);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t total = draws.num_chains * draws.num_iterations;
  const std::size_t divergences = draws.divergence_count();
  if (divergences * 10 > total) {
    draws.warnings.push_back(std::to_string(divergences) + " of " + std::to_string(total) +
                             " transitions diverged (more than 10%)");
  }
  std::size_t saturated = 0;
  for (const auto& chain : draws.tree_depth) {
    saturated += static_cast<std::size_t>(std::count(chain.begin(), chain.end(), config.max_tree_depth));
  }
  if (saturated > 0) {
    draws.warnings.push_back(std::to_string(saturated) + " transitions hit the maximum tree depth of " +
                             std::to_string(config.max_tree_depth));
  }
  return draws;
}

std::string chain_csv(const PosteriorDraws& draws, std::size_t chain) {
  std::string out = io::join_row(draws.names);
  std::vector<std::string> cells(draws.num_params());
  for (std::size_t it = 0; it < draws.num_iterations; ++it) {
    for (std::size_t p = 0; p < draws.num_params(); ++p) cells[p] = io::format_double(draws.at(chain, it, p));
    out += io::join_row(cells);
  }
  return out;
}

std::string chain_diagnostics_csv(const PosteriorDraws& draws, std::size_t chain) {
  std::string out = "accept_stat,tree_depth,n_leapfrog,divergent,energy\n";
  for (std::size_t it = 0; it < draws.num_iterations; ++it) {
    out += io::join_row({io::format_double(draws.accept_stat[chain][it]), std::to_string(draws.tree_depth[chain][it]),
                         std::to_string(draws.n_leapfrog[chain][it]), std::to_string(draws.divergent[chain][it]),
                         io::format_double(draws.energy[chain][it])});
  }
  return out;
}

PosteriorDraws read_chain_csvs(const std::vector<std::string>& texts) {
  if (texts.empty()) throw std::runtime_error("read_chain_csvs: no chains");
  PosteriorDraws draws;
  draws.num_chains = texts.size();
  std::vector<std::vector<double>> per_chain;
  for (std::size_t c = 0; c < texts.size(); ++c) {
    std::istringstream in(texts[c]);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_chain_csvs: empty chain file");
    std::vector<std::string> names;
    for (auto f : io::split(line, ',')) names.emplace_back(f);
    if (c == 0) {
      draws.names = names;
    } else if (names != draws.names) {
      throw std::runtime_error("read_chain_csvs: chains have different columns");
    }
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = io::split(line, ',');
      if (fields.size() != names.size()) {
        throw std::runtime_error("read_chain_csvs: row " + std::to_string(rows + 2) + " has the wrong width");
      }
      for (auto f : fields) {
        const auto v = io::parse_double(f);
        if (!v) throw std::runtime_error("read_chain_csvs: bad number '" + std::string(f) + "'");
        values.push_back(*v);
      }
      ++rows;
    }
    if (c == 0) {
      draws.num_iterations = rows;
    } else if (rows != draws.num_iterations) {
      throw std::runtime_error("read_chain_csvs: chains have different lengths");
    }
    per_chain.push_back(std::move(values));
  }
  for (auto& v : per_chain) draws.values.insert(draws.values.end(), v.begin(), v.end());
  return draws;
}

}  // namespace momentum::sampler
