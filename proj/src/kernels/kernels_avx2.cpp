#include <immintrin.h>

#include <algorithm>
#include <limits>

#include "delayiqc/kernels.hpp"

#define DELAYIQC_AVX2 __attribute__((target("avx2,fma")))

namespace delayiqc::kernels::avx2 {

namespace {

DELAYIQC_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

DELAYIQC_AVX2 inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace

DELAYIQC_AVX2 void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

DELAYIQC_AVX2 double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

DELAYIQC_AVX2 double qc_margin_min(const QcBatch& b) {
  const std::size_t n = b.p11.size();
  const __m256d two = _mm256_set1_pd(2.0);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d sr = _mm256_loadu_pd(b.s_re.data() + i);
    const __m256d si = _mm256_loadu_pd(b.s_im.data() + i);
    const __m256d mag2 = _mm256_fmadd_pd(sr, sr, _mm256_mul_pd(si, si));
    const __m256d cross = _mm256_fmadd_pd(_mm256_loadu_pd(b.p21_re.data() + i), sr,
                                          _mm256_mul_pd(_mm256_loadu_pd(b.p21_im.data() + i), si));
    __m256d v = _mm256_fmadd_pd(two, cross, _mm256_loadu_pd(b.p11.data() + i));
    v = _mm256_fmadd_pd(_mm256_loadu_pd(b.p22.data() + i), mag2, v);
    best = _mm256_min_pd(best, v);
  }
  double out = hmin(best);
  for (; i < n; ++i) {
    const double sr = b.s_re[i];
    const double si = b.s_im[i];
    out = std::min(out, b.p11[i] + 2.0 * (b.p21_re[i] * sr + b.p21_im[i] * si) +
                            b.p22[i] * (sr * sr + si * si));
  }
  return out;
}

DELAYIQC_AVX2 void quad_form_series(const double* m, std::size_t nz, const double* z,
                                    std::size_t n, double* out) {
  std::fill(out, out + n, 0.0);
  for (std::size_t i = 0; i < nz; ++i) {
    const double* zi = z + i * n;
    for (std::size_t j = i; j < nz; ++j) {
      const double w = (i == j) ? m[i * nz + j] : 2.0 * m[i * nz + j];
      if (w == 0.0) continue;
      const double* zj = z + j * n;
      const __m256d vw = _mm256_set1_pd(w);
      std::size_t t = 0;
      for (; t + 4 <= n; t += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(zi + t), _mm256_loadu_pd(zj + t));
        _mm256_storeu_pd(out + t, _mm256_fmadd_pd(vw, prod, _mm256_loadu_pd(out + t)));
      }
      for (; t < n; ++t) out[t] += w * zi[t] * zj[t];
    }
  }
}

}  // namespace delayiqc::kernels::avx2
