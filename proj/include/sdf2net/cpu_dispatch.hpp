#pragma once

// OpenBLAS picks its kernel from the CPU model string, which virtualized
// environments often mask; on such machines the dynamic dispatch lands on a
// pre-AVX kernel even though the vector units are there. The model choice is
// fixed inside the library constructor, before main() runs, so the only
// reliable override is the OPENBLAS_CORETYPE environment variable: when the
// detected kernel is clearly below what CPUID features allow, set it and
// re-exec the process once.

#include <cstdlib>
#include <cstring>
#include <string>
#include <unistd.h>

extern "C" char* openblas_get_corename(void);

namespace sdf2net::boot {

/// Call first thing in main(). Returns normally when the BLAS kernel already
/// matches the hardware (or on any failure); otherwise does not return.
inline void ensure_tuned_blas(char** argv) {
#if defined(__linux__) && (defined(__x86_64__) || defined(__i386__))
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
  if (std::getenv("SDF2NET_BLAS_REEXEC") != nullptr) return;  // loop guard

  const char* detected = openblas_get_corename();
  // Anything from the AVX era onward is fine as picked.
  static const char* kSlowCores[] = {"Prescott", "Core2", "Penryn", "Dunnington",
                                     "Nehalem", "Atom", "Northwood", "Banias",
                                     "Katmai", "Coppermine", "Opteron", "Barcelona"};
  bool slow = false;
  for (const char* c : kSlowCores) {
    if (std::strcmp(detected, c) == 0) slow = true;
  }
  if (!slow) return;

  const char* wanted = nullptr;
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512vl") &&
      __builtin_cpu_supports("avx512bw") && __builtin_cpu_supports("avx512dq")) {
    wanted = "SKYLAKEX";
  } else if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    wanted = "HASWELL";
  } else if (__builtin_cpu_supports("avx")) {
    wanted = "SANDYBRIDGE";
  }
  if (wanted == nullptr) return;

  ::setenv("OPENBLAS_CORETYPE", wanted, 1);
  ::setenv("SDF2NET_BLAS_REEXEC", "1", 1);
  ::execv("/proc/self/exe", argv);
  // exec failed; keep running on the slow kernel
#else
  (void)argv;
#endif
}

}  // namespace sdf2net::boot
