#pragma once

// Dense double-precision kernels behind the MLP substrate and optimizer.
//
// Every kernel exists as a scalar reference and, on x86-64 hosts with AVX2+FMA,
// a vectorized variant. The active table is chosen once at first use:
// WALKPRIOR_KERNELS=scalar|avx2 overrides the CPU probe. Vectorized reductions
// reassociate sums, so they agree with the scalar reference to rounding only;
// the elementwise kernels (axpy, scale, adam) are bit-identical across variants.

#include <cstddef>
#include <span>
#include <string_view>

namespace wp::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= s
  void (*scale)(double* x, double s, std::size_t n);
  // y[r] = bias[r] + sum_c W[r, c] x[c]; W row-major rows x cols. bias may be null.
  void (*matvec)(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
  // out[c] += sum_r W[r, c] g[r]
  void (*matvec_t_acc)(const double* w, const double* g, double* out, std::size_t rows,
                       std::size_t cols);
  // G[r, c] += g[r] * x[c]
  void (*rank1_acc)(double* grad, const double* g, const double* x, std::size_t rows,
                    std::size_t cols);
  // Bias-corrected adaptive-moment update over one contiguous parameter block.
  // lr_t already folds in the first-moment correction; v_corr is 1 / (1 - beta2^t).
  void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n, double lr_t,
               double beta1, double beta2, double v_corr, double eps);
};

const KernelTable& scalar_table();
// nullptr when the host lacks AVX2/FMA or the build is not x86-64.
const KernelTable* avx2_table();

const KernelTable& active();
// Force a variant ("scalar" or "avx2"); throws if unavailable.
void select(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(std::span<double> x, double s) { active().scale(x.data(), s, x.size()); }

}  // namespace wp::kernels
