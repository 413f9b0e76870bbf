// AVX2/FMA variant of the logistic block kernel. Compiled with -mavx2 -mfma;
// only kernel_types.hpp and the intrinsics header may be included here so no
// inline standard-library code is emitted with the wider instruction set.

#include <immintrin.h>

#include "momentum/kernel_types.hpp"

namespace momentum::kernels::avx2 {
namespace {

// exp(t) for t <= 0: Cody-Waite reduction to |r| <= ln2/2, then a degree-13
// Taylor polynomial (relative error below 2e-16 on the reduced range).
inline __m256d exp_nonpositive(__m256d t) {
  const __m256d lo = _mm256_set1_pd(-708.39641853226408);
  t = _mm256_max_pd(t, lo);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(t, _mm256_set1_pd(1.4426950408889634073599)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), t);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n with n in [-1022, 0]
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

// log(1 + e) for e in [0, 1] and 1 / (1 + e), fdlibm log1p polynomial on the
// reduced argument. Both quotients share one division.
inline __m256d log1p_and_inverse(__m256d e, __m256d& inv) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d big = _mm256_cmp_pd(e, _mm256_set1_pd(0.41421356237309503), _CMP_GT_OQ);
  const __m256d f = _mm256_blendv_pd(e, _mm256_mul_pd(_mm256_sub_pd(e, one), half), big);
  const __m256d k = _mm256_and_pd(big, one);

  const __m256d a = _mm256_add_pd(one, e);
  const __m256d b = _mm256_add_pd(two, f);
  const __m256d q = _mm256_div_pd(one, _mm256_mul_pd(a, b));
  inv = _mm256_mul_pd(b, q);
  const __m256d s = _mm256_mul_pd(_mm256_mul_pd(f, a), q);
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  __m256d t1 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.531383769920937332e-01),
                               _mm256_set1_pd(2.222219843214978396e-01));
  t1 = _mm256_fmadd_pd(w, t1, _mm256_set1_pd(3.999999999940941908e-01));
  t1 = _mm256_mul_pd(w, t1);
  __m256d t2 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.479819860511658591e-01),
                               _mm256_set1_pd(1.818357216161805012e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(2.857142874366239149e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(6.666666666666735130e-01));
  t2 = _mm256_mul_pd(z, t2);
  const __m256d R = _mm256_add_pd(t2, t1);
  const __m256d hfsq = _mm256_mul_pd(_mm256_mul_pd(half, f), f);

  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  // k*ln2_hi - ((hfsq - (s*(hfsq+R) + k*ln2_lo)) - f)
  const __m256d inner = _mm256_fmadd_pd(s, _mm256_add_pd(hfsq, R), _mm256_mul_pd(k, ln2_lo));
  const __m256d corr = _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f);
  return _mm256_fmsub_pd(k, ln2_hi, corr);
}

struct Accumulators {
  __m256d loglik = _mm256_setzero_pd();
  __m256d resid = _mm256_setzero_pd();
  __m256d resid_x = _mm256_setzero_pd();
  __m256d resid_color = _mm256_setzero_pd();
  __m256d resid_rating = _mm256_setzero_pd();
};

inline void accumulate(Accumulators& acc, __m256d y, __m256d x, __m256d c, __m256d d,
                       const LinearCoefs& coefs, __m256d live) {
  const __m256d zero = _mm256_setzero_pd();
  __m256d eta = _mm256_set1_pd(coefs.intercept);
  eta = _mm256_fmadd_pd(_mm256_set1_pd(coefs.slope), x, eta);
  eta = _mm256_fmadd_pd(_mm256_set1_pd(coefs.color), c, eta);
  eta = _mm256_fmadd_pd(_mm256_set1_pd(coefs.rating), d, eta);

  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d neg_abs = _mm256_sub_pd(zero, _mm256_and_pd(eta, abs_mask));
  const __m256d e = exp_nonpositive(neg_abs);
  __m256d inv;
  const __m256d log1p_e = log1p_and_inverse(e, inv);
  const __m256d nonneg = _mm256_cmp_pd(eta, zero, _CMP_GE_OQ);
  const __m256d p = _mm256_blendv_pd(_mm256_mul_pd(e, inv), inv, nonneg);
  const __m256d softplus = _mm256_add_pd(_mm256_max_pd(eta, zero), log1p_e);

  const __m256d ll = _mm256_and_pd(_mm256_fmsub_pd(y, eta, softplus), live);
  const __m256d r = _mm256_and_pd(_mm256_sub_pd(y, p), live);
  acc.loglik = _mm256_add_pd(acc.loglik, ll);
  acc.resid = _mm256_add_pd(acc.resid, r);
  acc.resid_x = _mm256_fmadd_pd(r, x, acc.resid_x);
  acc.resid_color = _mm256_fmadd_pd(r, c, acc.resid_color);
  acc.resid_rating = _mm256_fmadd_pd(r, d, acc.resid_rating);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair_lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
  const __m128d pair_hi = _mm_add_sd(hi, _mm_unpackhi_pd(hi, hi));
  return _mm_cvtsd_f64(_mm_add_sd(pair_lo, pair_hi));
}

}  // namespace

BlockSums logistic_block(const BlockView& block, const LinearCoefs& coefs) noexcept {
  Accumulators acc;
  const __m256d all = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  std::size_t i = 0;
  for (; i + 4 <= block.size; i += 4) {
    accumulate(acc, _mm256_loadu_pd(block.y + i), _mm256_loadu_pd(block.x + i),
               _mm256_loadu_pd(block.color + i), _mm256_loadu_pd(block.rating + i), coefs, all);
  }
  const std::size_t rest = block.size - i;
  if (rest > 0) {
    const __m256i lane = _mm256_set_epi64x(3, 2, 1, 0);
    const __m256i mask = _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(rest)), lane);
    accumulate(acc, _mm256_maskload_pd(block.y + i, mask), _mm256_maskload_pd(block.x + i, mask),
               _mm256_maskload_pd(block.color + i, mask), _mm256_maskload_pd(block.rating + i, mask),
               coefs, _mm256_castsi256_pd(mask));
  }
  BlockSums out;
  out.loglik = hsum(acc.loglik);
  out.resid = hsum(acc.resid);
  out.resid_x = hsum(acc.resid_x);
  out.resid_color = hsum(acc.resid_color);
  out.resid_rating = hsum(acc.resid_rating);
  return out;
}

}  // namespace momentum::kernels::avx2
