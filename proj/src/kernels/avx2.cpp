// Compiled with -mavx2 -mfma; only reached after a runtime CPU probe.
#include <immintrin.h>

#include <cmath>

#include "walkprior/kernels.hpp"

namespace wp::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double* x, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
  for (; i < n; ++i) x[i] *= s;
}

void matvec_avx2(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols) {
  std::size_t r = 0;
  // Four rows at a time share each load of x.
  for (; r + 4 <= rows; r += 4) {
    const double* r0 = w + r * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + c), xv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + c), xv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + c), xv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + c), xv, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; c < cols; ++c) {
      s0 += r0[c] * x[c];
      s1 += r1[c] * x[c];
      s2 += r2[c] * x[c];
      s3 += r3[c] * x[c];
    }
    y[r] = (bias ? bias[r] : 0.0) + s0;
    y[r + 1] = (bias ? bias[r + 1] : 0.0) + s1;
    y[r + 2] = (bias ? bias[r + 2] : 0.0) + s2;
    y[r + 3] = (bias ? bias[r + 3] : 0.0) + s3;
  }
  for (; r < rows; ++r) y[r] = (bias ? bias[r] : 0.0) + dot_avx2(w + r * cols, x, cols);
}

void matvec_t_acc_avx2(const double* w, const double* g, double* out, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* row = w + r * cols;
    const __m256d vg = _mm256_set1_pd(gr);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d o = _mm256_loadu_pd(out + c);
      _mm256_storeu_pd(out + c, _mm256_fmadd_pd(_mm256_loadu_pd(row + c), vg, o));
    }
    for (; c < cols; ++c) out[c] += row[c] * gr;
  }
}

void rank1_acc_avx2(double* grad, const double* g, const double* x, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = grad + r * cols;
    const __m256d vg = _mm256_set1_pd(gr);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d o = _mm256_loadu_pd(row + c);
      _mm256_storeu_pd(row + c, _mm256_fmadd_pd(vg, _mm256_loadu_pd(x + c), o));
    }
    for (; c < cols; ++c) row[c] += gr * x[c];
  }
}

void adam_avx2(double* p, const double* g, double* m, double* v, std::size_t n, double lr_t,
               double beta1, double beta2, double v_corr, double eps) {
  const __m256d b1 = _mm256_set1_pd(beta1), b2 = _mm256_set1_pd(beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - beta1), c2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d lr = _mm256_set1_pd(lr_t), vc = _mm256_set1_pd(v_corr);
  const __m256d ve = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
    __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vc)), ve);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, mi), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + one_m_b1 * g[i];
    v[i] = beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    p[i] -= lr_t * m[i] / (std::sqrt(v[i] * v_corr) + eps);
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      "avx2",      dot_avx2,          sum_squares_avx2, axpy_avx2, scale_avx2,
      matvec_avx2, matvec_t_acc_avx2, rank1_acc_avx2,   adam_avx2,
  };
  return table;
}

}  // namespace wp::kernels
