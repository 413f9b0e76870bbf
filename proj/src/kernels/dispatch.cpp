#include <cstdlib>
#include <string_view>

#include "momentum/kernels.hpp"

namespace momentum::kernels {

bool avx2_available() noexcept {
#if defined(MOMENTUM_HAS_AVX2)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

BlockKernel kernel_for(Isa isa) noexcept {
#if defined(MOMENTUM_HAS_AVX2)
  if (isa == Isa::avx2 && avx2_available()) return &avx2::logistic_block;
#endif
  (void)isa;
  return &scalar::logistic_block;
}

namespace {

Isa select_isa() noexcept {
  if (const char* forced = std::getenv("MOMENTUM_SIMD")) {
    if (std::string_view(forced) == "scalar") return Isa::scalar;
  }
  return avx2_available() ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() noexcept {
  static const Isa isa = select_isa();
  return isa;
}

BlockKernel active_kernel() noexcept { return kernel_for(active_isa()); }

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::scalar:
      break;
  }
  return "scalar";
}

}  // namespace momentum::kernels
