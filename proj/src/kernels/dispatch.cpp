#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "walkprior/kernels.hpp"

namespace wp::kernels {

#if defined(WALKPRIOR_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

const KernelTable* avx2_table() {
#if defined(WALKPRIOR_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernels() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* pick_default() {
  if (const char* env = std::getenv("WALKPRIOR_KERNELS")) {
    const std::string name(env);
    if (name == "scalar") return &scalar_table();
    if (name == "avx2") {
      if (const KernelTable* t = avx2_table()) return t;
      throw std::runtime_error("WALKPRIOR_KERNELS=avx2 but the host lacks AVX2/FMA");
    }
    throw std::runtime_error("unknown WALKPRIOR_KERNELS value: " + name);
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&scalar_table(), std::memory_order_release);
  } else if (name == "avx2") {
    const KernelTable* t = avx2_table();
    if (!t) throw std::runtime_error("avx2 kernels unavailable on this host");
    g_active.store(t, std::memory_order_release);
  } else {
    throw std::invalid_argument("unknown kernel variant: " + std::string(name));
  }
}

}  // namespace wp::kernels
