// Copyright 2026 the cycleprof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <string>

#if defined(__x86_64__) || defined(__i386__)
#include <cpuid.h>
#include <x86intrin.h>
#endif

#include "cycleprof/error.hpp"

namespace cp {

/// Raw cycle-counter reading. Unitless ticks; non-decreasing within one
/// process on one node.
struct CycleCount {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(CycleCount, CycleCount) = default;
};

/// Paired (wall-nanoseconds, cycle-count) reading taken back to back.
/// wall_ns comes from the raw monotonic clock, which is never slewed.
struct ClockSample {
    std::int64_t wall_ns = 0;
    CycleCount cycles;
};

/// Counter rate in ticks per second.
struct CounterFrequency {
    double hz = 0.0;
};

enum class CounterSource {
    /// Hardware cycle counter (rdtscp), only when the CPU advertises the
    /// nonstop+constant behavior.
    invariant_tsc,
    /// Raw monotonic clock treated as a 1 GHz virtual counter
    /// (ticks are nanoseconds).
    monotonic_raw,
};

inline const char* to_string(CounterSource s) {
    return s == CounterSource::invariant_tsc ? "invariant_tsc" : "monotonic_raw";
}

inline std::int64_t monotonic_raw_ns() {
    timespec ts;
    clock_gettime(CLOCK_MONOTONIC_RAW, &ts);
    return std::int64_t(ts.tv_sec) * 1000000000 + ts.tv_nsec;
}

namespace detail {

inline bool cpu_has_invariant_tsc() {
#if defined(__x86_64__) || defined(__i386__)
    unsigned a = 0, b = 0, c = 0, d = 0;
    if (!__get_cpuid(0x80000001, &a, &b, &c, &d)) return false;
    const bool has_rdtscp = (d >> 27) & 1;
    if (!__get_cpuid(0x80000007, &a, &b, &c, &d)) return false;
    const bool invariant = (d >> 8) & 1;
    return has_rdtscp && invariant;
#else
    return false;
#endif
}

inline CounterSource select_source() {
    if (const char* env = std::getenv("CP_COUNTER_SOURCE")) {
        if (std::strcmp(env, "invariant_tsc") == 0 || std::strcmp(env, "tsc") == 0)
            return CounterSource::invariant_tsc;
        if (std::strcmp(env, "monotonic_raw") == 0)
            return CounterSource::monotonic_raw;
    }
    return cpu_has_invariant_tsc() ? CounterSource::invariant_tsc
                                   : CounterSource::monotonic_raw;
}

}  // namespace detail

/// Source selected once at startup; written before any concurrent use.
inline CounterSource counter_source() {
    static const CounterSource src = detail::select_source();
    return src;
}

/// Read the counter of an explicit source.
inline CycleCount read_cycles(CounterSource src) noexcept {
#if defined(__x86_64__) || defined(__i386__)
    if (src == CounterSource::invariant_tsc) {
        unsigned aux;
        return CycleCount{__rdtscp(&aux)};
    }
#else
    (void)src;
#endif
    return CycleCount{std::uint64_t(monotonic_raw_ns())};
}

inline CycleCount read_cycles() noexcept { return read_cycles(counter_source()); }

/// Wall clock first, then the counter, in immediate succession. On the
/// fallback source a single clock read serves as both fields.
inline ClockSample sample_clock_pair(CounterSource src) noexcept {
    if (src == CounterSource::monotonic_raw) {
        const std::int64_t ns = monotonic_raw_ns();
        return ClockSample{ns, CycleCount{std::uint64_t(ns)}};
    }
    ClockSample s;
    s.wall_ns = monotonic_raw_ns();
    s.cycles = read_cycles(src);
    return s;
}

inline ClockSample sample_clock_pair() noexcept {
    return sample_clock_pair(counter_source());
}

/// Counter rate from two bracketing samples: hz = dcycles / dwall_ns * 1e9,
/// carried in double precision (sub-Hz resolution).
inline CounterFrequency calibrate_frequency(const ClockSample& s1,
                                            const ClockSample& s2) {
    const std::int64_t dwall = s2.wall_ns - s1.wall_ns;
    const std::int64_t dcycles =
        std::int64_t(s2.cycles.value - s1.cycles.value);
    if (dwall <= 0 || dcycles <= 0)
        throw InvalidSampleError("calibrate_frequency: non-positive sample delta");
    return CounterFrequency{double(dcycles) / double(dwall) * 1e9};
}

struct CounterSelfTest {
    double mean_latency_ns = 0.0;
    std::uint64_t monotonic_violations = 0;
    std::uint64_t iterations = 0;
    CounterSource source = CounterSource::monotonic_raw;
};

/// Invoke the counter in a tight loop; report mean per-call latency and the
/// number of backward steps (a healthy counter reports 0). A slow or
/// virtualized counter shows up as a high mean latency, not as an error.
inline CounterSelfTest self_test_counter(std::uint64_t iterations,
                                         CounterSource src = counter_source()) {
    if (iterations < 10000)
        throw ConfigError("self_test_counter: need at least 1e4 iterations");
    CounterSelfTest r;
    r.iterations = iterations;
    r.source = src;
    CycleCount prev = read_cycles(src);
    const std::int64_t t0 = monotonic_raw_ns();
    for (std::uint64_t i = 0; i < iterations; ++i) {
        const CycleCount c = read_cycles(src);
        if (c.value < prev.value) ++r.monotonic_violations;
        prev = c;
    }
    const std::int64_t t1 = monotonic_raw_ns();
    r.mean_latency_ns = double(t1 - t0) / double(iterations);
    return r;
}

}  // namespace cp
