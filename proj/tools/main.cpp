// SPDX-License-Identifier: Apache-2.0
#include "bofnet/cli.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Per-timestep activations are a few hundred KB each. Above the default
  // threshold glibc maps and unmaps every one of them, which costs ~15% of
  // training time in page faults.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  return bofnet::cli::dispatch(argc, argv);
}
