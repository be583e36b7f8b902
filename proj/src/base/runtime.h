// base/runtime.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_RUNTIME_H_
#define CSFNET_BASE_RUNTIME_H_

namespace csfnet {

// Keeps freed activation buffers in the process heap instead of returning
// them to the kernel, which removes most page-fault time in training loops.
// A no-op outside glibc.
void ConfigureAllocator();

}  // namespace csfnet

#endif  // CSFNET_BASE_RUNTIME_H_
