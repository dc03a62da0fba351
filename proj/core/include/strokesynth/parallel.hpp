// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace strokesynth {

/// Number of worker threads used by data-parallel kernels. 0 = one thread
/// per hardware core. Results never depend on this value: work is split
/// into fixed-size chunks and every chunk writes a disjoint output range.
void set_num_threads(int n);
int num_threads();

/// Runs fn(begin, end) over [0, total) split into chunks of at most `grain`
/// elements. Chunk boundaries depend only on (total, grain), never on the
/// thread count, and chunks may run in any order, so kernels must not
/// accumulate across chunk boundaries.
void parallel_for(std::int64_t total, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

} // namespace strokesynth
