#include <cmath>
#include <vector>

#include "doctest.h"
#include "walkprior/common.hpp"
#include "walkprior/kernels.hpp"

using wp::Vec;
namespace k = wp::kernels;

namespace {

Vec random_vec(wp::Rng& rng, std::size_t n) {
  Vec v(n);
  for (auto& x : v) x = wp::uniform(rng, -2.0, 2.0);
  return v;
}

void check_close(const Vec& a, const Vec& b, double rel) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= rel * (1.0 + std::abs(a[i])));
  }
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree on ragged sizes") {
  const k::KernelTable* simd = k::avx2_table();
  if (!simd) {
    MESSAGE("avx2 unavailable on this host; equivalence test skipped");
    return;
  }
  const k::KernelTable& ref = k::scalar_table();
  wp::Rng rng(7);
  for (std::size_t rows : {1u, 3u, 4u, 5u, 8u, 13u}) {
    for (std::size_t cols : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 67u}) {
      const Vec w = random_vec(rng, rows * cols);
      const Vec x = random_vec(rng, cols);
      const Vec bias = random_vec(rng, rows);
      const Vec g = random_vec(rng, rows);

      CHECK(std::abs(ref.dot(w.data(), w.data(), cols) - simd->dot(w.data(), w.data(), cols)) <=
            1e-12 * (1.0 + ref.dot(w.data(), w.data(), cols)));

      Vec y_ref(rows), y_simd(rows);
      ref.matvec(w.data(), bias.data(), x.data(), y_ref.data(), rows, cols);
      simd->matvec(w.data(), bias.data(), x.data(), y_simd.data(), rows, cols);
      check_close(y_ref, y_simd, 1e-12);

      Vec t_ref(cols, 0.5), t_simd(cols, 0.5);
      ref.matvec_t_acc(w.data(), g.data(), t_ref.data(), rows, cols);
      simd->matvec_t_acc(w.data(), g.data(), t_simd.data(), rows, cols);
      check_close(t_ref, t_simd, 1e-12);

      Vec r_ref = w, r_simd = w;
      ref.rank1_acc(r_ref.data(), g.data(), x.data(), rows, cols);
      simd->rank1_acc(r_simd.data(), g.data(), x.data(), rows, cols);
      check_close(r_ref, r_simd, 1e-12);
    }
  }
}

TEST_CASE("elementwise kernels are bit-identical across variants") {
  const k::KernelTable* simd = k::avx2_table();
  if (!simd) return;
  const k::KernelTable& ref = k::scalar_table();
  wp::Rng rng(11);
  for (std::size_t n : {0u, 1u, 5u, 16u, 37u}) {
    const Vec x = random_vec(rng, n);
    Vec a = random_vec(rng, n), b = a;
    ref.axpy(0.37, x.data(), a.data(), n);
    simd->axpy(0.37, x.data(), b.data(), n);
    CHECK(a == b);
    ref.scale(a.data(), -1.3, n);
    simd->scale(b.data(), -1.3, n);
    CHECK(a == b);

    Vec p1 = random_vec(rng, n), p2 = p1;
    const Vec g = random_vec(rng, n);
    Vec m1(n, 0.1), m2 = m1, v1(n, 0.2), v2 = v1;
    ref.adam(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1.5, 1e-8);
    simd->adam(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9, 0.999, 1.5, 1e-8);
    CHECK(p1 == p2);
    CHECK(m1 == m2);
    CHECK(v1 == v2);
  }
}

TEST_CASE("kernel selection") {
  const std::string before = k::active().name;
  k::select("scalar");
  CHECK(std::string(k::active().name) == "scalar");
  CHECK_THROWS(k::select("neon512"));
  k::select(before);
}
