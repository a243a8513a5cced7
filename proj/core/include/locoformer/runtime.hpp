// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace locoformer {

const char* version();

// Raises glibc's mmap/trim thresholds so multi-megabyte activation buffers
// are recycled on the heap instead of being mmap'd and faulted in on every
// op. Idempotent; called by the training loop, the verification suite and
// the CLI.
void tune_allocator();

}  // namespace locoformer
