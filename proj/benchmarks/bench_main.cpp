// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
