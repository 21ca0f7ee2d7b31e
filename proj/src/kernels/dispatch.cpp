#include <cstdlib>
#include <cstring>

#include "magflow/errors.hpp"
#include "magflow/kernels.hpp"

namespace magflow::kernels {

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MAGFLOW_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(MAGFLOW_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table& table(Isa isa) {
  if (!available(isa)) throw UnsupportedError(std::string("kernel set not available: ") + isa_name(isa));
  switch (isa) {
#if defined(MAGFLOW_HAVE_AVX2)
    case Isa::Avx2:
      return detail::avx2_table;
#endif
#if defined(MAGFLOW_HAVE_NEON)
    case Isa::Neon:
      return detail::neon_table;
#endif
    default:
      return detail::scalar_table;
  }
}

Isa active_isa() {
  static const Isa chosen = [] {
    const char* env = std::getenv("MAGFLOW_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    if (available(Isa::Avx2)) return Isa::Avx2;
    if (available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
  }();
  return chosen;
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

}  // namespace magflow::kernels
