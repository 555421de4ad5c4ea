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

#include "cycleprof/core_time.hpp"
#include "cycleprof/error.hpp"

namespace cp {

/// One RTT probe: the probing node reads its counter immediately before the
/// send and immediately after the matching response, and the responder's
/// counter value rides back in the response. The two local ClockSamples feed
/// frequency calibration later.
struct RttTriple {
    CycleCount c_start_local;  // probing node, before send
    CycleCount c_remote;       // responder, read on receipt
    CycleCount c_end_local;    // probing node, after receive
    ClockSample local_sample_start;
    ClockSample local_sample_end;

    std::uint64_t rtt_ticks() const {
        return c_end_local.value - c_start_local.value;
    }
};

/// The probe with the minimum RTT over a measurement run.
struct MinRttMeasurement {
    RttTriple triple;
    std::uint64_t rtt_ticks = 0;  // c_end_local - c_start_local of the winner
    double rtt_ns = 0.0;          // via the probing node's frequency
    std::uint32_t probes_run = 0;
    std::uint32_t probe_node = 0;
    std::uint32_t responder_node = 0;
};

/// A remote counter value expressed on the local counter, in the standard
/// error form: best estimate +- uncertainty, both in local ticks.
struct BestEstimate {
    double best = 0.0;
    double uncertainty = 0.0;
};

/// Everything needed to relate the responder's counter to the probing node's
/// counter: two MinRTT measurements of the same direction, the tick-rate
/// ratio between the two counters, and the probing node's calibrated
/// frequency for tick-to-second conversion.
struct ClockRelation {
    MinRttMeasurement m1;
    MinRttMeasurement m2;
    double ratio = 0.0;  // remote ticks per local tick
    BestEstimate est_j;  // m1's remote instant on the local counter
    BestEstimate est_m;  // m2's remote instant on the local counter
    CounterFrequency ref_freq;
};

/// A measured duration in the standard error form, in reference-node ticks
/// and in nanoseconds.
struct MeasuredDuration {
    double best_ticks = 0.0;
    double uncertainty_ticks = 0.0;
    double best_ns = 0.0;
    double uncertainty_ns = 0.0;
};

/// One status sample of an NTP-disciplined clock (chronyc-style fields).
/// root_sync_distance is carried verbatim for reporting; no computation
/// uses it.
struct NtpStatus {
    double offset_s = 0.0;           // system time offset (Theta)
    double root_dispersion_s = 0.0;  // E
    double root_delay_s = 0.0;       // Delta
    double root_sync_distance_s = 0.0;
};

namespace detail {

/// Signed difference of two counters as a double. Valid while |a-b| < 2^63.
inline double tick_diff(CycleCount a, CycleCount b) {
    return double(std::int64_t(a.value - b.value));
}

}  // namespace detail

/// The remote read happened somewhere inside [c_start_local, c_end_local];
/// the midpoint minimizes the worst-case error and half the RTT bounds it.
inline BestEstimate best_estimate(const RttTriple& t) {
    if (t.c_end_local.value < t.c_start_local.value)
        throw OrderingError("best_estimate: probe end before start");
    const double half = detail::tick_diff(t.c_end_local, t.c_start_local) / 2.0;
    return BestEstimate{double(t.c_start_local.value) + half, half};
}

/// Tick-rate ratio of the remote counter over the local counter, from two
/// MinRTT measurements. The denominator uses the best estimates; the raw
/// bracket values stay in the triples for audit.
inline double compute_ratio(const MinRttMeasurement& m1,
                            const MinRttMeasurement& m2) {
    const double num = detail::tick_diff(m2.triple.c_remote, m1.triple.c_remote);
    const double den = best_estimate(m2.triple).best - best_estimate(m1.triple).best;
    if (num <= 0.0)
        throw DegenerateRelationError("compute_ratio: remote counter did not advance");
    if (den <= 0.0)
        throw DegenerateRelationError("compute_ratio: non-positive local span");
    return num / den;
}

/// Assemble and validate a ClockRelation. ref_freq must be the probing
/// (local) node's calibrated frequency; every conversion through this
/// relation uses only that frequency.
inline ClockRelation make_relation(const MinRttMeasurement& m1,
                                   const MinRttMeasurement& m2,
                                   CounterFrequency ref_freq) {
    if (!(ref_freq.hz > 0.0) || !std::isfinite(ref_freq.hz))
        throw DegenerateRelationError("make_relation: bad reference frequency");
    ClockRelation rel;
    rel.m1 = m1;
    rel.m2 = m2;
    rel.est_j = best_estimate(m1.triple);
    rel.est_m = best_estimate(m2.triple);
    rel.ratio = compute_ratio(m1, m2);
    if (!std::isfinite(rel.ratio) || rel.ratio <= 0.0)
        throw DegenerateRelationError("make_relation: non-finite ratio");
    rel.ref_freq = ref_freq;
    return rel;
}

/// Map a remote counter value onto the local counter (real-valued local
/// ticks). Extrapolation outside the [m1, m2] bracket is allowed; the
/// uncertainty of durations grows accordingly.
inline double convert_remote_to_local(CycleCount c_remote,
                                      const ClockRelation& rel) {
    return rel.est_j.best +
           detail::tick_diff(c_remote, rel.m1.triple.c_remote) / rel.ratio;
}

/// Inverse of convert_remote_to_local.
inline double convert_local_to_remote(double local_ticks,
                                      const ClockRelation& rel) {
    return double(rel.m1.triple.c_remote.value) +
           (local_ticks - rel.est_j.best) * rel.ratio;
}

/// Duration between a local event c_x and a remote event c_y, with the
/// propagated uncertainty. Writing w for the remote interpolation weight
/// (c_y - c_j) / (c_m - c_j):
///
///   best = est_j + w * (est_m - est_j) - c_x
///   unc  = | d_est_j - w * (d_est_j - d_est_m) |
///
/// The uncertainty is reported as a magnitude.
inline MeasuredDuration duration_with_error(CycleCount c_x_local,
                                            CycleCount c_y_remote,
                                            const ClockRelation& rel) {
    const double den =
        detail::tick_diff(rel.m2.triple.c_remote, rel.m1.triple.c_remote);
    if (den == 0.0)
        throw DegenerateRelationError("duration_with_error: equal remote anchors");
    const double w =
        detail::tick_diff(c_y_remote, rel.m1.triple.c_remote) / den;

    MeasuredDuration d;
    d.best_ticks = (rel.est_j.best - double(c_x_local.value)) +
                   w * (rel.est_m.best - rel.est_j.best);
    d.uncertainty_ticks = std::fabs(
        rel.est_j.uncertainty -
        w * (rel.est_j.uncertainty - rel.est_m.uncertainty));
    const double ns_per_tick = 1e9 / rel.ref_freq.hz;
    d.best_ns = d.best_ticks * ns_per_tick;
    d.uncertainty_ns = d.uncertainty_ticks * ns_per_tick;
    return d;
}

/// Maximum clock error of an NTP-disciplined clock, in seconds:
/// |offset| + root_dispersion + root_delay / 2.
inline double ntp_error_bound_s(const NtpStatus& s) {
    return std::fabs(s.offset_s) + s.root_dispersion_s + 0.5 * s.root_delay_s;
}

/// Return-trip duration: both timestamps come from the same counter, so the
/// best value is a plain difference, and the accuracy is the worst RTT the
/// session observed (supplied by the caller from the return-trip logs).
inline MeasuredDuration ret_duration(CycleCount t1_local, CycleCount t3_local,
                                     CounterFrequency freq,
                                     double session_max_rtt_ticks) {
    if (t3_local.value < t1_local.value)
        throw OrderingError("ret_duration: t3 before t1");
    if (!(freq.hz > 0.0))
        throw InvalidSampleError("ret_duration: bad frequency");
    MeasuredDuration d;
    d.best_ticks = detail::tick_diff(t3_local, t1_local);
    d.uncertainty_ticks = std::fabs(session_max_rtt_ticks);
    const double ns_per_tick = 1e9 / freq.hz;
    d.best_ns = d.best_ticks * ns_per_tick;
    d.uncertainty_ns = d.uncertainty_ticks * ns_per_tick;
    return d;
}

}  // namespace cp
