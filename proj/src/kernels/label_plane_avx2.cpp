// Built with -mavx2 and called only after a runtime CPU check. Keep
// everything here free of static initializers.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "plane_common.hpp"

namespace pixfuse::kernels {
namespace {

// exp and log follow the classic Cephes rational approximations, the same
// curves behind most libm implementations, so the vector results stay
// within an ulp or two of the scalar path.

inline __m256d exp256d(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.782712893383996732);
  const __m256d lo = _mm256_set1_pd(-708.396418532264106224);
  const __m256d log2e = _mm256_set1_pd(1.44269504088896340736);
  const __m256d ln2Hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2Lo = _mm256_set1_pd(1.42860682030941723212e-6);

  __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OS);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  __m256d n = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(x, log2e), _mm256_set1_pd(0.5)));
  x = _mm256_sub_pd(x, _mm256_mul_pd(n, ln2Hi));
  x = _mm256_sub_pd(x, _mm256_mul_pd(n, ln2Lo));

  __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
  px = _mm256_add_pd(_mm256_mul_pd(px, xx), _mm256_set1_pd(3.02994407707441961300e-2));
  px = _mm256_add_pd(_mm256_mul_pd(px, xx), _mm256_set1_pd(9.99999999999999999910e-1));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
  qx = _mm256_add_pd(_mm256_mul_pd(qx, xx), _mm256_set1_pd(2.52448340349684104192e-3));
  qx = _mm256_add_pd(_mm256_mul_pd(qx, xx), _mm256_set1_pd(2.27265548208155028766e-1));
  qx = _mm256_add_pd(_mm256_mul_pd(qx, xx), _mm256_set1_pd(2.00000000000000000005e0));
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_add_pd(_mm256_add_pd(e, e), _mm256_set1_pd(1.0));

  // scale by 2^n through the exponent bits
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(n64));
  return _mm256_andnot_pd(underflow, e);
}

// Positive normal inputs only; the kernel feeds sums in [1, bands].
inline __m256d log256d(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);

  __m256i bits = _mm256_castpd_si256(x);
  __m256i expBits = _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7ff));
  __m256i eInt = _mm256_sub_epi64(expBits, _mm256_set1_epi64x(1022));
  // int64 -> double for the small exponent values
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000LL); // bits of 2^52 + 2^51
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(eInt, magic)),
                            _mm256_set1_pd(6755399441055744.0));

  __m256i mant = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FE0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant); // [0.5, 1)

  __m256d small = _mm256_cmp_pd(m, _mm256_set1_pd(0.70710678118654752440), _CMP_LT_OS);
  m = _mm256_blendv_pd(m, _mm256_add_pd(m, m), small);
  e = _mm256_blendv_pd(e, _mm256_sub_pd(e, one), small);
  __m256d z = _mm256_sub_pd(m, one);

  __m256d zz = _mm256_mul_pd(z, z);
  __m256d p = _mm256_set1_pd(1.01875663804580931796e-4);
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(4.97494994976747001425e-1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(4.70579119878881725854e0));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(1.44989225341610930846e1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(1.79368678507819816313e1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(7.70838733755885391666e0));
  __m256d q = _mm256_add_pd(z, _mm256_set1_pd(1.12873587189167450590e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(4.52279145837532221105e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(8.29875266912776603211e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(7.11544750618563894466e1));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(2.31251620126765340583e1));

  __m256d y = _mm256_mul_pd(_mm256_mul_pd(z, zz), _mm256_div_pd(p, q));
  y = _mm256_sub_pd(y, _mm256_mul_pd(_mm256_set1_pd(0.5), zz));
  y = _mm256_sub_pd(y, _mm256_mul_pd(e, _mm256_set1_pd(2.121944400546905827679e-4)));
  __m256d res = _mm256_add_pd(z, y);
  return _mm256_add_pd(res, _mm256_mul_pd(e, _mm256_set1_pd(0.693359375)));
}

inline __m256d load4PixelsAsDouble(const std::uint8_t* plane, std::size_t base) {
  std::int32_t packed;
  std::memcpy(&packed, plane + base, 4);
  return _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(_mm_cvtsi32_si128(packed)));
}

} // namespace

void labelPlaneRowsAvx2(const PlaneProblem& pb, double* out, int rowBegin, int rowEnd) {
  const int width = pb.width, bands = pb.bands, classes = pb.classCount;
  const double qn = -pb.q;
  const double lnBands = std::log(static_cast<double>(bands));
  const __m256d qnV = _mm256_set1_pd(qn);
  const __m256d dMaxV = _mm256_set1_pd(kDistanceCap);
  const __m256d invQV = _mm256_set1_pd(1.0 / pb.q);
  const __m256d lnBandsV = _mm256_set1_pd(lnBands);
  const __m256d oneV = _mm256_set1_pd(1.0);
  const __m256d epsV = _mm256_set1_pd(pb.epsilon);

  __m256d xv[kAvx2MaxBands];
  __m256d tv[kAvx2MaxBands];
  __m256d alphaV[kAvx2MaxClasses];
  alignas(32) double tmp[4];
  double xScalar[kAvx2MaxBands];

  for (int row = rowBegin; row < rowEnd; ++row) {
    int col = 0;
    for (; col + 4 <= width; col += 4) {
      std::size_t base = static_cast<std::size_t>(row) * width + col;
      for (int j = 0; j < bands; ++j) xv[j] = load4PixelsAsDouble(pb.bandPlanes[j], base);
      for (int k = 0; k < classes; ++k) alphaV[k] = _mm256_setzero_pd();

      for (int r = 0; r < pb.ruleCount; ++r) {
        const double* ctr = pb.centers + static_cast<std::size_t>(r) * bands;
        const double* isp = pb.invSpreads + static_cast<std::size_t>(r) * bands;
        __m256d maxT = _mm256_setzero_pd();
        for (int j = 0; j < bands; ++j) {
          __m256d z = _mm256_mul_pd(_mm256_sub_pd(xv[j], _mm256_set1_pd(ctr[j])),
                                    _mm256_set1_pd(isp[j]));
          __m256d d = _mm256_min_pd(_mm256_mul_pd(z, z), dMaxV);
          __m256d t = _mm256_mul_pd(d, qnV);
          tv[j] = t;
          maxT = _mm256_max_pd(maxT, t);
        }
        __m256d sum = _mm256_setzero_pd();
        for (int j = 0; j < bands; ++j)
          sum = _mm256_add_pd(sum, exp256d(_mm256_sub_pd(tv[j], maxT)));
        __m256d lnSm = _mm256_mul_pd(
            _mm256_sub_pd(_mm256_add_pd(maxT, log256d(sum)), lnBandsV), invQV);
        __m256d firing = _mm256_min_pd(exp256d(lnSm), oneV);
        int k = pb.consequents[r];
        alphaV[k] = _mm256_max_pd(alphaV[k], firing);
      }

      for (int k = 0; k < classes; ++k) {
        __m256d a = alphaV[k];
        a = _mm256_andnot_pd(_mm256_cmp_pd(a, epsV, _CMP_LT_OS), a);
        _mm256_store_pd(tmp, a);
        for (int i = 0; i < 4; ++i) out[(base + i) * classes + k] = tmp[i];
      }
    }
    for (; col < width; ++col) {
      std::size_t pixel = static_cast<std::size_t>(row) * width + col;
      labelOnePixel(pb, pixel, xScalar, out + pixel * classes);
    }
  }
}

} // namespace pixfuse::kernels
