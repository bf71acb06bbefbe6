#include <atomic>
#include <cstdlib>
#include <string>

#include "nsdf/core.hpp"
#include "nsdf/tensor/kernels.hpp"

namespace nsdf::tensor {

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

namespace {

Backend detect_backend() {
  if (const char* env = std::getenv("NSDF_BACKEND")) {
    std::string want(env);
    Backend b;
    if (want == "scalar") b = Backend::scalar;
    else if (want == "avx2") b = Backend::avx2;
    else if (want == "neon") b = Backend::neon;
    else
      throw Error(ErrorKind::config, "NSDF_BACKEND must be scalar, avx2 or neon (got '" + want + "')");
    if (!backend_available(b))
      throw Error(ErrorKind::config, std::string("requested backend '") + backend_name(b) +
                                         "' is not available on this machine");
    return b;
  }
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

std::atomic<Backend> g_backend{detect_backend()};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b))
    throw Error(ErrorKind::config, std::string("backend '") + backend_name(b) +
                                       "' is not available on this machine");
  g_backend.store(b, std::memory_order_relaxed);
}

namespace kernels {

const Table& table(Backend b) {
  if (!backend_available(b))
    throw Error(ErrorKind::config, std::string("backend '") + backend_name(b) +
                                       "' is not available on this machine");
  switch (b) {
    case Backend::scalar:
      return scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2:
      return avx2_table;
#endif
#if defined(__aarch64__)
    case Backend::neon:
      return neon_table;
#endif
    default:
      return scalar_table;
  }
}

const Table& active() { return table(active_backend()); }

}  // namespace kernels
}  // namespace nsdf::tensor
