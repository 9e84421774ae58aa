// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace graft {

/// Worker count: GRAFT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Every index is
/// visited exactly once; the first exception thrown is rethrown after all
/// workers finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace graft
