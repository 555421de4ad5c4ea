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

// Two-clock simulator: virtual counters with chosen frequencies and offsets,
// plus probe links with scripted or seeded delays. This is the only way to
// check the error bounds against ground truth at desk scale, so it ships as
// part of the library surface rather than as test-only code.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <unordered_map>
#include <vector>

#include "cycleprof/probe.hpp"

namespace cp::sim {

/// Shared "true" time line, in nanoseconds.
class SimTime {
public:
    std::int64_t now_ns() const { return now_; }
    void advance_ns(std::int64_t ns) { now_ += ns; }
    void advance_s(double s) { now_ += std::int64_t(s * 1e9); }

private:
    std::int64_t now_ = 0;
};

/// A counter running at `hz` ticks per second, started at some arbitrary
/// tick offset, observed through a wall clock with its own offset.
struct VirtualCounter {
    double hz = 1e9;
    double tick_offset = 0.0;
    std::int64_t wall_offset_ns = 0;

    CycleCount ticks_at(std::int64_t t_ns) const {
        return CycleCount{
            std::uint64_t(std::int64_t(std::floor(tick_offset + hz * 1e-9 * double(t_ns))))};
    }

    ClockSample sample_at(std::int64_t t_ns) const {
        return ClockSample{wall_offset_ns + t_ns, ticks_at(t_ns)};
    }
};

class SimNodeClock : public LocalClock {
public:
    SimNodeClock(const SimTime* time, VirtualCounter counter)
        : time_(time), counter_(counter) {}

    ClockSample sample() const override {
        return counter_.sample_at(time_->now_ns());
    }

    const VirtualCounter& counter() const { return counter_; }

private:
    const SimTime* time_;
    VirtualCounter counter_;
};

/// One-way delay source. A negative delay means "drop this message".
class DelayModel {
public:
    virtual ~DelayModel() = default;
    virtual std::int64_t next_ns() = 0;
};

/// Replays a fixed list of delays, wrapping around at the end.
class ScriptedDelays : public DelayModel {
public:
    explicit ScriptedDelays(std::vector<std::int64_t> delays_ns)
        : delays_(std::move(delays_ns)) {}

    std::int64_t next_ns() override {
        const std::int64_t d = delays_[idx_ % delays_.size()];
        ++idx_;
        return d;
    }

private:
    std::vector<std::int64_t> delays_;
    std::size_t idx_ = 0;
};

/// Uniform delays in [min, max]. Hand-rolled draw so that a fixed seed gives
/// identical streams on every platform.
class UniformDelays : public DelayModel {
public:
    UniformDelays(std::int64_t min_ns, std::int64_t max_ns, std::uint64_t seed)
        : min_(min_ns), span_(std::uint64_t(max_ns - min_ns) + 1), rng_(seed) {}

    std::int64_t next_ns() override {
        return min_ + std::int64_t(rng_() % span_);
    }

private:
    std::int64_t min_;
    std::uint64_t span_;
    std::mt19937_64 rng_;
};

/// Probe link between two simulated nodes. A probe advances shared time by
/// the forward delay, reads the responder's counter, then advances by the
/// reverse delay.
class SimLink : public ProbeEndpoint {
public:
    SimLink(SimTime* time, const VirtualCounter* responder,
            std::unique_ptr<DelayModel> forward, std::unique_ptr<DelayModel> reverse)
        : time_(time),
          responder_(responder),
          forward_(std::move(forward)),
          reverse_(std::move(reverse)) {}

    void send_probe(std::uint32_t seq) override {
        const std::int64_t d = forward_->next_ns();
        if (d < 0) return;  // request lost
        time_->advance_ns(d);
        inflight_[seq] = responder_->ticks_at(time_->now_ns()).value;
    }

    std::optional<std::uint64_t> await_response(std::uint32_t seq,
                                                int timeout_ms) override {
        const auto it = inflight_.find(seq);
        if (it == inflight_.end()) {
            time_->advance_ns(std::int64_t(timeout_ms) * 1000000);
            return std::nullopt;
        }
        const std::uint64_t cycles = it->second;
        inflight_.erase(it);
        const std::int64_t d = reverse_->next_ns();
        if (d < 0) {
            time_->advance_ns(std::int64_t(timeout_ms) * 1000000);
            return std::nullopt;  // response lost
        }
        time_->advance_ns(d);
        return cycles;
    }

private:
    SimTime* time_;
    const VirtualCounter* responder_;
    std::unique_ptr<DelayModel> forward_;
    std::unique_ptr<DelayModel> reverse_;
    std::unordered_map<std::uint32_t, std::uint64_t> inflight_;
};

/// A set of simulated nodes with uniform-delay links, usable as the
/// measurement executor of a full orchestrated session.
class SimCluster : public MeasurementExecutor {
public:
    explicit SimCluster(std::uint64_t seed = 1) : seed_(seed) {}

    std::uint32_t add_node(double hz, double tick_offset = 0.0,
                           std::int64_t wall_offset_ns = 0) {
        const auto id = std::uint32_t(counters_.size());
        counters_.push_back(VirtualCounter{hz, tick_offset, wall_offset_ns});
        return id;
    }

    void set_link_delays(std::uint32_t src, std::uint32_t dst,
                         std::int64_t min_ns, std::int64_t max_ns) {
        delay_ranges_[{src, dst}] = {min_ns, max_ns};
    }

    void set_default_delays(std::int64_t min_ns, std::int64_t max_ns) {
        default_range_ = {min_ns, max_ns};
    }

    SimTime& time() { return time_; }
    const VirtualCounter& counter(std::uint32_t node) const {
        return counters_.at(node);
    }

    SimNodeClock clock(std::uint32_t node) const {
        return SimNodeClock(&time_, counters_.at(node));
    }

    std::vector<NodeInfo> nodes() override {
        std::vector<NodeInfo> out;
        for (std::uint32_t i = 0; i < counters_.size(); ++i)
            out.push_back(NodeInfo{i, "simulated", counters_[i].hz, ""});
        return out;
    }

    MinRttMeasurement measure(std::uint32_t src, std::uint32_t dst,
                              std::uint32_t iterations) override {
        auto& link = link_for(src, dst);
        const SimNodeClock clk(&time_, counters_.at(src));
        return run_minrtt(clk, link, src, dst, iterations,
                          CounterFrequency{counters_.at(src).hz});
    }

    void wait(double seconds) override { time_.advance_s(seconds); }

private:
    SimLink& link_for(std::uint32_t src, std::uint32_t dst) {
        const auto key = std::make_pair(src, dst);
        auto it = links_.find(key);
        if (it == links_.end()) {
            auto range = default_range_;
            if (const auto rit = delay_ranges_.find(key); rit != delay_ranges_.end())
                range = rit->second;
            const std::uint64_t link_seed =
                seed_ ^ (std::uint64_t(src) << 32) ^ (std::uint64_t(dst) + 0x9e3779b9u);
            auto link = std::make_unique<SimLink>(
                &time_, &counters_.at(dst),
                std::make_unique<UniformDelays>(range.first, range.second, link_seed),
                std::make_unique<UniformDelays>(range.first, range.second,
                                                link_seed ^ 0x5555aaaa5555aaaaULL));
            it = links_.emplace(key, std::move(link)).first;
        }
        return *it->second;
    }

    std::uint64_t seed_;
    SimTime time_;
    std::vector<VirtualCounter> counters_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<std::int64_t, std::int64_t>>
        delay_ranges_;
    std::pair<std::int64_t, std::int64_t> default_range_{30000, 300000};
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::unique_ptr<SimLink>> links_;
};

}  // namespace cp::sim
