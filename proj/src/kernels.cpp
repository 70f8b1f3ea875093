#include "mfb/kernels.hpp"

#include <cstdlib>
#include <string>

#include "mfb/errors.hpp"

namespace mfb::kernels {

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("MFB_KERNELS")) {
    std::string s(env);
    if (s == "scalar") return Backend::scalar;
    if (s == "avx2" && cpu_has_avx2()) return Backend::avx2;
    // unknown or unsupported request falls back to autodetection
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_default();

}  // namespace

const Ops& ops() {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_backend == Backend::avx2) return avx2_ops();
#endif
  return scalar_ops();
}

Backend active_backend() { return g_backend; }

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool backend_supported(Backend b) {
  if (b == Backend::scalar) return true;
  return cpu_has_avx2();
}

void set_backend(Backend b) {
  if (!backend_supported(b)) throw CapabilityError("kernel backend not supported on this CPU: " + backend_name(b));
  g_backend = b;
}

}  // namespace mfb::kernels
