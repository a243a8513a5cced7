// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#include "locoformer/runtime.hpp"

#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

namespace locoformer {

const char* version() { return "0.1.0"; }

// Activation tensors are a few megabytes and are allocated/freed once per op
// per step. Left at its defaults, glibc serves them with mmap/munmap and a
// page-fault storm on every reuse, which costs more than the arithmetic.
void tune_allocator() {
  static const bool done = [] {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
    return true;
  }();
  (void)done;
}

}  // namespace locoformer
