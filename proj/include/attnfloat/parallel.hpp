// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace attnfloat {

/// Worker count: ATTNFLOAT_THREADS if set to a positive integer, otherwise
/// std::thread::hardware_concurrency().
std::size_t worker_count();

/// Runs fn(i) for i in [0, count). Each index is visited exactly once; the
/// caller is responsible for writing results into disjoint slots. The first
/// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace attnfloat
