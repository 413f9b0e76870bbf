#pragma once

// Plain data types shared by every kernel translation unit. This header must
// stay free of standard-library templates: it is included by the AVX2 unit,
// which is compiled with wider ISA flags than the rest of the program.

#include <cstddef>

namespace momentum::kernels {

struct LinearCoefs {
  double intercept = 0.0;
  double slope = 0.0;   // multiplies the centered win ratio
  double color = 0.0;   // multiplies the white indicator
  double rating = 0.0;  // multiplies the rating difference
};

/// Column pointers for one block; all arrays have length `size`.
struct BlockView {
  const double* y = nullptr;
  const double* x = nullptr;
  const double* color = nullptr;
  const double* rating = nullptr;
  std::size_t size = 0;
};

/// loglik = sum y*eta - softplus(eta); resid_* = sum (y - p) * covariate.
struct BlockSums {
  double loglik = 0.0;
  double resid = 0.0;
  double resid_x = 0.0;
  double resid_color = 0.0;
  double resid_rating = 0.0;

  BlockSums& operator+=(const BlockSums& o) noexcept {
    loglik += o.loglik;
    resid += o.resid;
    resid_x += o.resid_x;
    resid_color += o.resid_color;
    resid_rating += o.resid_rating;
    return *this;
  }
};

}  // namespace momentum::kernels
