// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "mrf/simd/kernels.hpp"

namespace mrf::simd::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  const __m128d s = _mm_max_pd(m, _mm_unpackhi_pd(m, m));
  return _mm_cvtsd_f64(s);
}

}  // namespace

double relax_jacobi(const RelaxStencil& st, const double* v_in, double* v_out, std::size_t begin,
                    std::size_t end) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d change = _mm256_setzero_pd();
  std::size_t i = begin;
  for (; i + kLanes <= end; i += kLanes) {
    __m256d best = _mm256_setzero_pd();
    for (std::size_t c = 0; c < st.controls; ++c) {
      __m256d cand = _mm256_loadu_pd(st.cost.data() + c * st.nodes + i);
      for (std::size_t k = 0; k < st.corners; ++k) {
        const std::size_t s = st.slot(c, k, i);
        const __m128i idx =
            _mm_loadu_si128(reinterpret_cast<const __m128i*>(st.index.data() + s));
        const __m256d v = _mm256_i32gather_pd(v_in, idx, 8);
        cand = _mm256_fmadd_pd(_mm256_loadu_pd(st.weight.data() + s), v, cand);
      }
      // min_pd(a, b) = a < b ? a : b, matching the scalar tie rule.
      best = c == 0 ? cand : _mm256_min_pd(cand, best);
    }
    _mm256_storeu_pd(v_out + i, best);
    const __m256d diff = _mm256_andnot_pd(sign_mask, _mm256_sub_pd(best, _mm256_loadu_pd(v_in + i)));
    change = _mm256_max_pd(change, diff);
  }
  double tail = hmax(change);
  if (i < end) tail = std::fmax(tail, scalar::relax_jacobi(st, v_in, v_out, i, end));
  return tail;
}

void min_hamiltonian_batch(std::size_t n, std::size_t controls, std::size_t dim, double p0,
                           const double* lagr, const double* flow, const double* covec,
                           double* out) {
  const __m256d vp0 = _mm256_set1_pd(p0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d best = _mm256_setzero_pd();
    for (std::size_t c = 0; c < controls; ++c) {
      __m256d acc = _mm256_mul_pd(vp0, _mm256_loadu_pd(lagr + c * n + i));
      for (std::size_t d = 0; d < dim; ++d) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(covec + d * n + i),
                              _mm256_loadu_pd(flow + (c * dim + d) * n + i), acc);
      }
      best = c == 0 ? acc : _mm256_min_pd(acc, best);
    }
    _mm256_storeu_pd(out + i, best);
  }
  for (; i < n; ++i) {
    double best = 0.0;
    for (std::size_t c = 0; c < controls; ++c) {
      double acc = p0 * lagr[c * n + i];
      for (std::size_t d = 0; d < dim; ++d) {
        acc = std::fma(covec[d * n + i], flow[(c * dim + d) * n + i], acc);
      }
      best = (c == 0 || acc < best) ? acc : best;
    }
    out[i] = best;
  }
}

double max_element(const double* values, std::size_t n) {
  __m256d m = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) m = _mm256_max_pd(m, _mm256_loadu_pd(values + i));
  double r = hmax(m);
  for (; i < n; ++i) r = values[i] > r ? values[i] : r;
  return r;
}

}  // namespace mrf::simd::avx2
