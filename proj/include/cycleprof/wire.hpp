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
#include <string>

#include "cycleprof/bytes.hpp"
#include "cycleprof/error.hpp"

namespace cp {

/// Message types of the measurement/control wire. One frame on the wire is
///   u32 big-endian length | u8 msg_type | u32 big-endian seq | payload
/// where length counts everything after itself.
enum class MsgType : std::uint8_t {
    probe_req = 1,
    probe_resp = 2,   // payload: u64 big-endian cycle count
    register_req = 3, // payload: empty (request) or JSON node metadata (reply)
    measure_cmd = 4,  // payload: JSON command parameters
    result = 5,       // payload: JSON result
    ret_ack = 6,      // payload: u64 big-endian tuple id
};

struct Frame {
    MsgType type = MsgType::probe_req;
    std::uint32_t seq = 0;
    std::string payload;
};

inline constexpr std::size_t kMaxFramePayload = 16u << 20;

inline std::string encode_frame(const Frame& f) {
    std::string out;
    out.reserve(9 + f.payload.size());
    put_be32(out, std::uint32_t(5 + f.payload.size()));
    out.push_back(char(f.type));
    put_be32(out, f.seq);
    out.append(f.payload);
    return out;
}

/// Parse the body of a frame (everything after the length prefix).
inline Frame decode_frame_body(const std::string& body) {
    if (body.size() < 5) throw FormatError("wire: short frame body");
    Frame f;
    const auto* p = reinterpret_cast<const unsigned char*>(body.data());
    f.type = MsgType(p[0]);
    f.seq = get_be32(p + 1);
    f.payload.assign(body.begin() + 5, body.end());
    return f;
}

inline Frame make_probe_req(std::uint32_t seq) {
    return Frame{MsgType::probe_req, seq, {}};
}

inline Frame make_probe_resp(std::uint32_t seq, std::uint64_t cycles) {
    Frame f{MsgType::probe_resp, seq, {}};
    put_be64(f.payload, cycles);
    return f;
}

inline std::uint64_t probe_resp_cycles(const Frame& f) {
    if (f.type != MsgType::probe_resp || f.payload.size() != 8)
        throw FormatError("wire: bad probe response");
    return get_be64(reinterpret_cast<const unsigned char*>(f.payload.data()));
}

inline Frame make_ret_ack(std::uint64_t tuple_id) {
    Frame f{MsgType::ret_ack, 0, {}};
    put_be64(f.payload, tuple_id);
    return f;
}

inline std::uint64_t ret_ack_tuple(const Frame& f) {
    if (f.type != MsgType::ret_ack || f.payload.size() != 8)
        throw FormatError("wire: bad ret ack");
    return get_be64(reinterpret_cast<const unsigned char*>(f.payload.data()));
}

}  // namespace cp
