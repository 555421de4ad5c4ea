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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cycleprof/core_time.hpp"
#include "cycleprof/net.hpp"
#include "cycleprof/probe.hpp"
#include "cycleprof/relation_io.hpp"

namespace cp {

/// The platform clock as a probe-loop clock.
class SystemClock : public LocalClock {
public:
    explicit SystemClock(CounterSource src = counter_source()) : src_(src) {}
    ClockSample sample() const override { return sample_clock_pair(src_); }

private:
    CounterSource src_;
};

/// Probe conversation over one TCP stream. Responses whose seq does not
/// match are discarded.
class TcpProbeEndpoint : public ProbeEndpoint {
public:
    explicit TcpProbeEndpoint(Stream& stream) : stream_(stream) {}

    void send_probe(std::uint32_t seq) override {
        stream_.send_frame(make_probe_req(seq));
    }

    std::optional<std::uint64_t> await_response(std::uint32_t seq,
                                                int timeout_ms) override {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::milliseconds(timeout_ms);
        for (;;) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  deadline - std::chrono::steady_clock::now())
                                  .count();
            if (left <= 0) return std::nullopt;
            auto f = stream_.recv_frame(int(left));
            if (!f) return std::nullopt;
            if (f->type == MsgType::probe_resp && f->seq == seq)
                return probe_resp_cycles(*f);
            // stale or foreign frame: drop and keep waiting
        }
    }

private:
    Stream& stream_;
};

/// Quick startup calibration for reporting a nominal frequency.
inline CounterFrequency calibrate_nominal(CounterSource src,
                                          int window_ms = 50) {
    const ClockSample s1 = sample_clock_pair(src);
    std::this_thread::sleep_for(std::chrono::milliseconds(window_ms));
    const ClockSample s2 = sample_clock_pair(src);
    return calibrate_frequency(s1, s2);
}

/// Measurement responder. Serves three kinds of requests on one service
/// loop (probe handling must stay serialized so the remote-read instant is
/// well defined):
///   - PROBE_REQ: reply with the counter value read on receipt
///   - REGISTER:  reply with node metadata
///   - MEASURE_CMD: probe another responder and reply with the result
class SlaveServer {
public:
    SlaveServer(const std::string& bind_addr, std::uint32_t node_id,
                CounterSource src = counter_source())
        : listener_(bind_addr),
          node_id_(node_id),
          src_(src),
          nominal_(calibrate_nominal(src)) {}

    std::uint16_t port() const { return listener_.port(); }
    std::uint32_t node_id() const { return node_id_; }

    void stop() { stop_.store(true); }

    /// Runs until stop(); poll granularity 50 ms.
    void serve() {
        std::vector<Stream> conns;
        while (!stop_.load()) {
            if (auto s = listener_.accept(10)) conns.push_back(std::move(*s));
            for (std::size_t i = 0; i < conns.size();) {
                pollfd pfd{conns[i].fd(), POLLIN, 0};
                const int pr = ::poll(&pfd, 1, 0);
                if (pr <= 0) {
                    ++i;
                    continue;
                }
                bool drop = false;
                try {
                    auto f = conns[i].recv_frame(1000);
                    if (!f)
                        drop = true;  // EOF
                    else
                        handle(conns[i], *f);
                } catch (const Error&) {
                    drop = true;  // malformed message: log-and-drop policy
                }
                if (drop)
                    conns.erase(conns.begin() + std::ptrdiff_t(i));
                else
                    ++i;
            }
        }
    }

private:
    void handle(Stream& conn, const Frame& f) {
        switch (f.type) {
            case MsgType::probe_req: {
                const CycleCount c = read_cycles(src_);
                conn.send_frame(make_probe_resp(f.seq, c.value));
                break;
            }
            case MsgType::register_req: {
                nlohmann::json j{{"node_id", node_id_},
                                 {"counter_source", to_string(src_)},
                                 {"nominal_hz", nominal_.hz}};
                conn.send_frame(Frame{MsgType::register_req, f.seq, j.dump()});
                break;
            }
            case MsgType::measure_cmd: {
                conn.send_frame(run_measure_cmd(f));
                break;
            }
            default:
                throw FormatError("slave: unexpected message type");
        }
    }

    Frame run_measure_cmd(const Frame& f) {
        nlohmann::json reply;
        try {
            const auto cmd = nlohmann::json::parse(f.payload);
            const std::string target = cmd.at("target_addr").get<std::string>();
            const auto target_node = cmd.at("target_node").get<std::uint32_t>();
            const auto iterations = cmd.at("iterations").get<std::uint32_t>();
            const int timeout_ms = cmd.value("timeout_ms", 1000);

            auto it = probe_conns_.find(target);
            if (it == probe_conns_.end() || !it->second.valid())
                it = probe_conns_.insert_or_assign(target, connect_to(target)).first;
            TcpProbeEndpoint ep(it->second);
            const SystemClock clk(src_);
            const MinRttMeasurement m = run_minrtt(clk, ep, node_id_, target_node,
                                                   iterations, nominal_, timeout_ms);
            reply["minrtt"] = to_json(m);
        } catch (const std::exception& e) {
            reply["error"] = e.what();
        }
        return Frame{MsgType::result, f.seq, reply.dump()};
    }

    Listener listener_;
    std::uint32_t node_id_;
    CounterSource src_;
    CounterFrequency nominal_;
    std::atomic<bool> stop_{false};
    std::map<std::string, Stream> probe_conns_;
};

/// Orchestrator-side executor talking to live responders over TCP.
class TcpExecutor : public MeasurementExecutor {
public:
    explicit TcpExecutor(const std::vector<std::string>& slave_addrs,
                         int probe_timeout_ms = 1000)
        : probe_timeout_ms_(probe_timeout_ms) {
        std::uint32_t seq = 0;
        for (const auto& addr : slave_addrs) {
            Stream s = connect_to(addr);
            s.send_frame(Frame{MsgType::register_req, seq, {}});
            auto reply = s.recv_frame(5000);
            if (!reply || reply->type != MsgType::register_req)
                throw NetError("register with " + addr + " failed");
            const auto j = nlohmann::json::parse(reply->payload);
            NodeInfo info;
            info.node_id = j.at("node_id").get<std::uint32_t>();
            info.counter_source = j.at("counter_source").get<std::string>();
            info.nominal_hz = j.at("nominal_hz").get<double>();
            info.addr = addr;
            by_node_[info.node_id] = conns_.size();
            infos_.push_back(info);
            conns_.push_back(std::move(s));
            ++seq;
        }
    }

    std::vector<NodeInfo> nodes() override { return infos_; }

    MinRttMeasurement measure(std::uint32_t src, std::uint32_t dst,
                              std::uint32_t iterations) override {
        const auto sit = by_node_.find(src);
        const auto dit = by_node_.find(dst);
        if (sit == by_node_.end() || dit == by_node_.end())
            throw ConfigError("measure: unregistered node");
        nlohmann::json cmd{{"target_addr", infos_[dit->second].addr},
                           {"target_node", dst},
                           {"iterations", iterations},
                           {"timeout_ms", probe_timeout_ms_}};
        Stream& s = conns_[sit->second];
        s.send_frame(Frame{MsgType::measure_cmd, next_seq_++, cmd.dump()});
        // worst case: every probe retried three times at full timeout
        const int reply_timeout =
            int(std::int64_t(iterations) * probe_timeout_ms_ * 3 + 10000);
        auto reply = s.recv_frame(reply_timeout);
        if (!reply || reply->type != MsgType::result)
            throw MeasurementFailedError("no measurement result from node " +
                                         std::to_string(src));
        const auto j = nlohmann::json::parse(reply->payload);
        if (j.contains("error"))
            throw MeasurementFailedError(j.at("error").get<std::string>());
        return minrtt_from_json(j.at("minrtt"));
    }

    void wait(double seconds) override {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }

private:
    int probe_timeout_ms_;
    std::vector<Stream> conns_;
    std::vector<NodeInfo> infos_;
    std::map<std::uint32_t, std::size_t> by_node_;
    std::uint32_t next_seq_ = 1;
};

struct SessionSpec {
    std::uint32_t iterations = 100;
    double spacing_s = 10.0;
    std::optional<std::uint32_t> ref_node;  // default: lowest node id
    std::string out_dir;                    // empty: don't write files
};

struct SessionResult {
    std::vector<NodeInfo> nodes;
    std::uint32_t ref_node = 0;
    std::map<std::pair<std::uint32_t, std::uint32_t>, ClockRelation> relations;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::string> errors;
};

/// Run the full measurement session: MinRTT m1 for every ordered pair, wait
/// the configured spacing, MinRTT m2, then assemble one relation per ordered
/// pair (n*(n-1) of them) and optionally write the relation files. The
/// probing node's frequency is calibrated from its two bracketing samples
/// (m1 start, m2 end) and frozen for the session.
inline SessionResult master_measure(
    MeasurementExecutor& exec, const SessionSpec& spec,
    const std::function<void(const std::string&)>& progress = {}) {
    SessionResult result;
    result.nodes = exec.nodes();
    if (result.nodes.size() < 2)
        throw ConfigError("master_measure: need at least 2 nodes");
    if (spec.iterations < 1)
        throw ConfigError("master_measure: iterations must be >= 1");

    std::vector<std::uint32_t> ids;
    for (const auto& n : result.nodes) ids.push_back(n.node_id);
    std::sort(ids.begin(), ids.end());
    result.ref_node = spec.ref_node.value_or(ids.front());

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (const auto a : ids)
        for (const auto b : ids)
            if (a != b) pairs.emplace_back(a, b);

    const auto note = [&](const std::string& s) {
        if (progress) progress(s);
    };

    std::map<std::pair<std::uint32_t, std::uint32_t>, MinRttMeasurement> m1;
    for (const auto& p : pairs) {
        try {
            m1[p] = exec.measure(p.first, p.second, spec.iterations);
        } catch (const Error& e) {
            result.errors[p] = std::string("m1: ") + e.what();
        }
    }
    note("m1 complete");

    exec.wait(spec.spacing_s);

    for (const auto& p : pairs) {
        if (!m1.count(p)) continue;
        try {
            const MinRttMeasurement first = m1[p];
            MinRttMeasurement second = exec.measure(p.first, p.second, spec.iterations);
            const CounterFrequency freq = calibrate_frequency(
                first.triple.local_sample_start, second.triple.local_sample_end);
            MinRttMeasurement m1_fixed = first;
            m1_fixed.rtt_ns = double(m1_fixed.rtt_ticks) * 1e9 / freq.hz;
            second.rtt_ns = double(second.rtt_ticks) * 1e9 / freq.hz;
            result.relations[p] = make_relation(m1_fixed, second, freq);
        } catch (const Error& e) {
            result.errors[p] = std::string("m2: ") + e.what();
        }
    }
    note("m2 complete");

    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        for (const auto& [pair, rel] : result.relations) {
            const auto path = std::filesystem::path(spec.out_dir) /
                              relation_file_name(pair.first, pair.second);
            write_relation_file(path.string(), rel);
        }
        nlohmann::json session{{"schema_version", kRelationSchemaVersion},
                               {"ref_node", result.ref_node},
                               {"iterations", spec.iterations},
                               {"spacing_s", spec.spacing_s}};
        auto& jnodes = session["nodes"] = nlohmann::json::array();
        for (const auto& n : result.nodes)
            jnodes.push_back({{"node_id", n.node_id},
                              {"counter_source", n.counter_source},
                              {"nominal_hz", n.nominal_hz},
                              {"addr", n.addr}});
        auto& jerr = session["errors"] = nlohmann::json::array();
        for (const auto& [pair, msg] : result.errors)
            jerr.push_back({{"src", pair.first}, {"dst", pair.second}, {"error", msg}});
        std::ofstream out(std::filesystem::path(spec.out_dir) / "session.json");
        out << session.dump(2) << "\n";
    }
    note("session complete");
    return result;
}

}  // namespace cp
