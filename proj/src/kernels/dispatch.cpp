#include <cstdlib>
#include <string>

#include "worldgen/core/error.hpp"
#include "worldgen/kernels/kernels.hpp"

namespace worldgen::kernels {

std::string backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

static bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("WORLDGEN_KERNELS")) {
    std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2") {
      require(cpu_has_avx2(), ErrorKind::Config, "WORLDGEN_KERNELS=avx2 but CPU lacks AVX2");
      return Backend::Avx2;
    }
    if (!v.empty()) raise(ErrorKind::Config, "WORLDGEN_KERNELS must be 'scalar' or 'avx2', got '" + v + "'");
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

const Funcs& active() {
  // Resolved once; the override is read at first use, not per call.
  static const Funcs& f = detect_backend() == Backend::Avx2 ? avx2() : scalar();
  return f;
}

}  // namespace worldgen::kernels
