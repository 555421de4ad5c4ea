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

#include <cstdint>
#include <optional>
#include <string>

#include "cycleprof/relation.hpp"

namespace cp {

/// Clock of the probing node, as the probe loop sees it. Implemented by the
/// platform clock and by the simulator's virtual counters.
class LocalClock {
public:
    virtual ~LocalClock() = default;
    virtual ClockSample sample() const = 0;
};

/// One probe conversation with a responder. send_probe must put the request
/// on the wire before returning; await_response returns the responder's
/// cycle count for that seq, or nullopt on timeout. Responses with a stale
/// seq are discarded inside await_response.
class ProbeEndpoint {
public:
    virtual ~ProbeEndpoint() = default;
    virtual void send_probe(std::uint32_t seq) = 0;
    virtual std::optional<std::uint64_t> await_response(std::uint32_t seq,
                                                        int timeout_ms) = 0;
};

/// One RTT probe: local sample, request, response, local sample.
inline RttTriple run_rtt_probe(const LocalClock& clk, ProbeEndpoint& ep,
                               std::uint32_t seq, int timeout_ms = 1000) {
    RttTriple t;
    t.local_sample_start = clk.sample();
    t.c_start_local = t.local_sample_start.cycles;
    ep.send_probe(seq);
    const auto remote = ep.await_response(seq, timeout_ms);
    if (!remote)
        throw ProbeTimeoutError("probe " + std::to_string(seq) + " timed out");
    t.local_sample_end = clk.sample();
    t.c_end_local = t.local_sample_end.cycles;
    t.c_remote = CycleCount{*remote};
    return t;
}

/// Run `iterations` probes and keep the one with the minimum RTT. Individual
/// timeouts are retried (up to two extra attempts each); if nothing ever
/// comes back the measurement fails.
inline MinRttMeasurement run_minrtt(const LocalClock& clk, ProbeEndpoint& ep,
                                    std::uint32_t probe_node,
                                    std::uint32_t responder_node,
                                    std::uint32_t iterations,
                                    CounterFrequency freq_hint,
                                    int timeout_ms = 1000) {
    if (iterations < 1)
        throw ConfigError("run_minrtt: iterations must be >= 1");
    MinRttMeasurement m;
    m.probe_node = probe_node;
    m.responder_node = responder_node;
    std::uint32_t seq = 0;
    for (std::uint32_t i = 0; i < iterations; ++i) {
        std::optional<RttTriple> triple;
        for (int attempt = 0; attempt < 3 && !triple; ++attempt) {
            try {
                triple = run_rtt_probe(clk, ep, seq++, timeout_ms);
            } catch (const ProbeTimeoutError&) {
            }
        }
        if (!triple) continue;
        ++m.probes_run;
        if (m.probes_run == 1 || triple->rtt_ticks() < m.rtt_ticks) {
            m.triple = *triple;
            m.rtt_ticks = triple->rtt_ticks();
        }
    }
    if (m.probes_run == 0)
        throw MeasurementFailedError("all probes to node " +
                                     std::to_string(responder_node) + " timed out");
    if (freq_hint.hz > 0.0) m.rtt_ns = double(m.rtt_ticks) * 1e9 / freq_hint.hz;
    return m;
}

/// Metadata a responder reports when it registers.
struct NodeInfo {
    std::uint32_t node_id = 0;
    std::string counter_source;
    double nominal_hz = 0.0;
    std::string addr;
};

/// How the orchestrator runs measurements — over TCP against live
/// responders, or locally against the simulator.
class MeasurementExecutor {
public:
    virtual ~MeasurementExecutor() = default;
    virtual std::vector<NodeInfo> nodes() = 0;
    virtual MinRttMeasurement measure(std::uint32_t src_node,
                                      std::uint32_t dst_node,
                                      std::uint32_t iterations) = 0;
    virtual void wait(double seconds) = 0;
};

}  // namespace cp
