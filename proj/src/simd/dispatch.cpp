#include <atomic>
#include <cstdlib>
#include <string>

#include "odrop/error.hpp"
#include "odrop/simd/kernels.hpp"

namespace odrop::simd {

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
const KernelTable* avx2_kernel_table();
#define ODROP_HAVE_AVX2_VARIANT 1
#else
#define ODROP_HAVE_AVX2_VARIANT 0
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if ODROP_HAVE_AVX2_VARIANT
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* avx2_kernels() {
#if ODROP_HAVE_AVX2_VARIANT
  if (cpu_supports(Isa::avx2)) return avx2_kernel_table();
#endif
  return nullptr;
}

namespace {

const KernelTable* select_initial() {
  const char* forced = std::getenv("ODROP_SIMD");
  if (forced != nullptr && std::string(forced) == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

void set_active(Isa isa) {
  if (isa == Isa::scalar) {
    slot().store(&scalar_kernels());
    return;
  }
  const KernelTable* t = avx2_kernels();
  if (t == nullptr) throw InvalidArgument("CPU does not support the avx2 kernel variant");
  slot().store(t);
}

}  // namespace odrop::simd
