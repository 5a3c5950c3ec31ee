#include "npeflow/simd.hpp"

#include <cstdlib>
#include <string_view>

namespace npeflow::simd {

const Kernels& active() {
  static const Kernels* chosen = [] {
    if (const char* env = std::getenv("NPEFLOW_SIMD");
        env && std::string_view(env) == "scalar")
      return &scalar();
#if defined(NPEFLOW_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
      return &avx2();
#elif defined(NPEFLOW_HAVE_NEON_TU)
    return &neon();
#endif
    return &scalar();
  }();
  return *chosen;
}

}  // namespace npeflow::simd
