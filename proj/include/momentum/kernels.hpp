#pragma once

// Logistic-regression block kernels.
//
// A block is a contiguous run of observations that share the same linear
// predictor coefficients (one player's games). The kernel returns the
// log-likelihood of the block together with the residual sums needed for the
// analytic gradient. Two implementations exist: a scalar reference and an
// AVX2/FMA variant that is picked at runtime when the CPU supports it.

#include <string_view>

#include "momentum/kernel_types.hpp"

namespace momentum::kernels {

using BlockKernel = BlockSums (*)(const BlockView&, const LinearCoefs&) noexcept;

enum class Isa { scalar, avx2 };

namespace scalar {
BlockSums logistic_block(const BlockView& block, const LinearCoefs& coefs) noexcept;
}

#if defined(MOMENTUM_HAS_AVX2)
namespace avx2 {
BlockSums logistic_block(const BlockView& block, const LinearCoefs& coefs) noexcept;
}
#endif

/// True when the AVX2 kernels were compiled in and the CPU supports AVX2+FMA.
bool avx2_available() noexcept;

/// Kernel for an explicit ISA. Requesting avx2 when unavailable falls back to scalar.
BlockKernel kernel_for(Isa isa) noexcept;

/// The kernel chosen at startup. `MOMENTUM_SIMD=scalar` in the environment
/// forces the scalar reference.
BlockKernel active_kernel() noexcept;
Isa active_isa() noexcept;

std::string_view isa_name(Isa isa) noexcept;

}  // namespace momentum::kernels
