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

#include <fstream>
#include <string>

#include <json.hpp>

#include "cycleprof/error.hpp"
#include "cycleprof/relation.hpp"

namespace cp {

inline constexpr int kRelationSchemaVersion = 1;

inline nlohmann::json to_json(const ClockSample& s) {
    return {{"wall_ns", s.wall_ns}, {"cycles", s.cycles.value}};
}

inline ClockSample clock_sample_from_json(const nlohmann::json& j) {
    return ClockSample{j.at("wall_ns").get<std::int64_t>(),
                       CycleCount{j.at("cycles").get<std::uint64_t>()}};
}

inline nlohmann::json to_json(const RttTriple& t) {
    return {{"c_start_local", t.c_start_local.value},
            {"c_remote", t.c_remote.value},
            {"c_end_local", t.c_end_local.value},
            {"sample_start", to_json(t.local_sample_start)},
            {"sample_end", to_json(t.local_sample_end)}};
}

inline RttTriple rtt_triple_from_json(const nlohmann::json& j) {
    RttTriple t;
    t.c_start_local = CycleCount{j.at("c_start_local").get<std::uint64_t>()};
    t.c_remote = CycleCount{j.at("c_remote").get<std::uint64_t>()};
    t.c_end_local = CycleCount{j.at("c_end_local").get<std::uint64_t>()};
    t.local_sample_start = clock_sample_from_json(j.at("sample_start"));
    t.local_sample_end = clock_sample_from_json(j.at("sample_end"));
    return t;
}

inline nlohmann::json to_json(const MinRttMeasurement& m) {
    return {{"triple", to_json(m.triple)},
            {"rtt_ticks", m.rtt_ticks},
            {"rtt_ns", m.rtt_ns},
            {"probes_run", m.probes_run},
            {"probe_node", m.probe_node},
            {"responder_node", m.responder_node}};
}

inline MinRttMeasurement minrtt_from_json(const nlohmann::json& j) {
    MinRttMeasurement m;
    m.triple = rtt_triple_from_json(j.at("triple"));
    m.rtt_ticks = j.at("rtt_ticks").get<std::uint64_t>();
    m.rtt_ns = j.at("rtt_ns").get<double>();
    m.probes_run = j.at("probes_run").get<std::uint32_t>();
    m.probe_node = j.at("probe_node").get<std::uint32_t>();
    m.responder_node = j.at("responder_node").get<std::uint32_t>();
    return m;
}

/// Self-describing relation record for one ordered node pair. src is the
/// probing (local/reference) node, dst the responder whose ticks get
/// converted.
inline nlohmann::json relation_to_json(const ClockRelation& rel) {
    return {{"schema_version", kRelationSchemaVersion},
            {"src", rel.m1.probe_node},
            {"dst", rel.m1.responder_node},
            {"ratio", rel.ratio},
            {"ref_freq_hz", rel.ref_freq.hz},
            {"m1", to_json(rel.m1)},
            {"m2", to_json(rel.m2)},
            {"est_j", {{"best", rel.est_j.best}, {"uncertainty", rel.est_j.uncertainty}}},
            {"est_m", {{"best", rel.est_m.best}, {"uncertainty", rel.est_m.uncertainty}}}};
}

inline ClockRelation relation_from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kRelationSchemaVersion)
        throw FormatError("relation file: unsupported schema version");
    const auto m1 = minrtt_from_json(j.at("m1"));
    const auto m2 = minrtt_from_json(j.at("m2"));
    const CounterFrequency f{j.at("ref_freq_hz").get<double>()};
    return make_relation(m1, m2, f);
}

inline std::string relation_file_name(std::uint32_t src, std::uint32_t dst) {
    return "rel_" + std::to_string(src) + "_" + std::to_string(dst) + ".json";
}

inline void write_relation_file(const std::string& path, const ClockRelation& rel) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write relation file " + path);
    out << relation_to_json(rel).dump(2) << "\n";
}

inline ClockRelation read_relation_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read relation file " + path);
    nlohmann::json j;
    in >> j;
    return relation_from_json(j);
}

}  // namespace cp
