#include "momentum/fit.hpp"

namespace momentum::fit {

sampler::Target make_target(const model::LogPosterior& posterior) {
  sampler::Target target;
  const std::size_t J = posterior.num_players();
  target.dim = posterior.dim();
  target.names = model::parameter_names(J);
  target.log_density = [&posterior](std::span<const double> q, std::span<double> grad) {
    return posterior(q, grad);
  };
  target.initial_inv_metric = posterior.variance_guess();
  target.transform = [J](std::span<const double> q, std::vector<double>& out) {
    out = model::flatten(model::constrain(q, J).params);
  };
  return target;
}

sampler::PosteriorDraws fit_model(const features::Dataset& data, const sampler::SamplerConfig& config,
                                  const model::ModelOptions& options) {
  const model::LogPosterior posterior(data, options);
  return sampler::sample(make_target(posterior), config);
}

}  // namespace momentum::fit
