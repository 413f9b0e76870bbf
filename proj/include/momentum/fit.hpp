#pragma once

// Glue between the model and the sampler.

#include "momentum/model.hpp"
#include "momentum/sampler.hpp"

namespace momentum::fit {

/// Sampler target whose stored columns are the constrained parameters in
/// model::parameter_names order. `posterior` must outlive the target.
sampler::Target make_target(const model::LogPosterior& posterior);

/// Fits the hierarchical model to `data`.
sampler::PosteriorDraws fit_model(const features::Dataset& data, const sampler::SamplerConfig& config,
                                  const model::ModelOptions& options = {});

}  // namespace momentum::fit
