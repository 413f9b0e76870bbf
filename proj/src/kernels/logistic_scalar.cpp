#include <algorithm>
#include <cmath>

#include "momentum/kernels.hpp"

namespace momentum::kernels::scalar {

BlockSums logistic_block(const BlockView& block, const LinearCoefs& coefs) noexcept {
  BlockSums out;
  for (std::size_t i = 0; i < block.size; ++i) {
    const double eta = coefs.intercept + coefs.slope * block.x[i] + coefs.color * block.color[i] +
                       coefs.rating * block.rating[i];
    const double e = std::exp(-std::abs(eta));
    const double inv = 1.0 / (1.0 + e);
    const double p = eta >= 0.0 ? inv : e * inv;
    const double softplus = std::max(eta, 0.0) + std::log1p(e);
    const double r = block.y[i] - p;
    out.loglik += block.y[i] * eta - softplus;
    out.resid += r;
    out.resid_x += r * block.x[i];
    out.resid_color += r * block.color[i];
    out.resid_rating += r * block.rating[i];
  }
  return out;
}

}  // namespace momentum::kernels::scalar
