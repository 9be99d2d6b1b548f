#include <benchmark/benchmark.h>

// The packaged benchmark_main archive is not usable with this toolchain.
BENCHMARK_MAIN();
