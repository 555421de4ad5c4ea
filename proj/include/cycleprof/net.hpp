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

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <utility>

#include "cycleprof/error.hpp"
#include "cycleprof/wire.hpp"

namespace cp {

/// "host:port" -> (host, port).
inline std::pair<std::string, std::uint16_t> split_addr(const std::string& addr) {
    const auto pos = addr.rfind(':');
    if (pos == std::string::npos)
        throw ConfigError("address must be host:port, got '" + addr + "'");
    const int port = std::atoi(addr.c_str() + pos + 1);
    if (port <= 0 || port > 65535)
        throw ConfigError("bad port in '" + addr + "'");
    return {addr.substr(0, pos), std::uint16_t(port)};
}

/// Owning TCP stream with framed send/recv. Blocking, with poll-based
/// receive timeouts.
class Stream {
public:
    Stream() = default;
    explicit Stream(int fd) : fd_(fd) {
        if (fd_ >= 0) {
            int one = 1;
            ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        }
    }
    Stream(Stream&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Stream& operator=(Stream&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Stream(const Stream&) = delete;
    Stream& operator=(const Stream&) = delete;
    ~Stream() { close(); }

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    void send_all(const void* data, std::size_t len) {
        const char* p = static_cast<const char*>(data);
        while (len > 0) {
            const ssize_t n = ::send(fd_, p, len, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw NetError(std::string("send: ") + std::strerror(errno));
            }
            p += n;
            len -= std::size_t(n);
        }
    }

    void send_frame(const Frame& f) {
        const std::string bytes = encode_frame(f);
        send_all(bytes.data(), bytes.size());
    }

    /// Receive exactly len bytes. Returns false on clean EOF at a message
    /// boundary (len bytes pending = throws). nullopt-style timeouts are
    /// handled by recv_frame.
    bool recv_exact(void* data, std::size_t len, int timeout_ms) {
        char* p = static_cast<char*>(data);
        std::size_t got = 0;
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::milliseconds(timeout_ms);
        while (got < len) {
            if (timeout_ms >= 0) {
                const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                      deadline - std::chrono::steady_clock::now())
                                      .count();
                if (left <= 0) return false;
                pollfd pfd{fd_, POLLIN, 0};
                const int pr = ::poll(&pfd, 1, int(left));
                if (pr < 0) {
                    if (errno == EINTR) continue;
                    throw NetError(std::string("poll: ") + std::strerror(errno));
                }
                if (pr == 0) return false;
            }
            const ssize_t n = ::recv(fd_, p + got, len - got, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw NetError(std::string("recv: ") + std::strerror(errno));
            }
            if (n == 0) {
                if (got == 0) return false;  // EOF at boundary
                throw NetError("recv: connection closed mid-frame");
            }
            got += std::size_t(n);
        }
        return true;
    }

    /// Receive one frame; nullopt on timeout or clean EOF.
    std::optional<Frame> recv_frame(int timeout_ms) {
        unsigned char lenbuf[4];
        if (!recv_exact(lenbuf, 4, timeout_ms)) return std::nullopt;
        const std::uint32_t len = get_be32(lenbuf);
        if (len < 5 || len > kMaxFramePayload + 5)
            throw FormatError("wire: bad frame length");
        std::string body(len, '\0');
        if (!recv_exact(body.data(), len, timeout_ms))
            throw NetError("recv: timeout mid-frame");
        return decode_frame_body(body);
    }

private:
    int fd_ = -1;
};

class Listener {
public:
    Listener() = default;
    explicit Listener(const std::string& addr) { bind(addr); }
    Listener(Listener&& o) noexcept : fd_(std::exchange(o.fd_, -1)), port_(o.port_) {}
    Listener(const Listener&) = delete;
    ~Listener() { close(); }

    void bind(const std::string& addr) {
        auto [host, port] = split_addr(addr);
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw NetError(std::string("socket: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in sa{};
        sa.sin_family = AF_INET;
        sa.sin_port = htons(port);
        if (host.empty() || host == "*" || host == "0.0.0.0")
            sa.sin_addr.s_addr = INADDR_ANY;
        else if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
            throw NetError("bind: bad host '" + host + "'");
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0)
            throw NetError("bind " + addr + ": " + std::strerror(errno));
        if (::listen(fd_, 64) < 0)
            throw NetError(std::string("listen: ") + std::strerror(errno));
        socklen_t slen = sizeof sa;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &slen);
        port_ = ntohs(sa.sin_port);
    }

    /// Accept with timeout; nullopt if none arrived.
    std::optional<Stream> accept(int timeout_ms) {
        pollfd pfd{fd_, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr < 0) {
            if (errno == EINTR) return std::nullopt;
            throw NetError(std::string("poll: ") + std::strerror(errno));
        }
        if (pr == 0) return std::nullopt;
        const int cfd = ::accept(fd_, nullptr, nullptr);
        if (cfd < 0) throw NetError(std::string("accept: ") + std::strerror(errno));
        return Stream(cfd);
    }

    int fd() const { return fd_; }
    std::uint16_t port() const { return port_; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

inline Stream connect_to(const std::string& addr, int timeout_ms = 5000) {
    auto [host, port] = split_addr(addr);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port_s = std::to_string(port);
    if (::getaddrinfo(host.c_str(), port_s.c_str(), &hints, &res) != 0 || !res)
        throw NetError("connect: cannot resolve '" + host + "'");
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw NetError(std::string("socket: ") + std::strerror(errno));
    }
    const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0) {
        const int err = errno;
        ::close(fd);
        throw NetError("connect " + addr + ": " + std::strerror(err));
    }
    (void)timeout_ms;
    return Stream(fd);
}

}  // namespace cp
