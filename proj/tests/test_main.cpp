#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "sdf2net/cpu_dispatch.hpp"

int main(int argc, char** argv) {
  sdf2net::boot::ensure_tuned_blas(argv);
  return doctest::Context(argc, argv).run();
}
