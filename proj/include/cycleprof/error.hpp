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

#include <stdexcept>
#include <string>

namespace cp {

/// Base class for all cycleprof errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Degenerate clock samples (non-positive wall or tick delta).
class InvalidSampleError : public Error {
public:
    using Error::Error;
};

/// Relation whose denominators collapse (equal remote anchors, non-positive
/// local span).
class DegenerateRelationError : public Error {
public:
    using Error::Error;
};

/// Timestamps supplied in the wrong order.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// A single RTT probe did not complete in time.
class ProbeTimeoutError : public Error {
public:
    using Error::Error;
};

/// Every probe of a MinRTT measurement failed.
class MeasurementFailedError : public Error {
public:
    using Error::Error;
};

/// Socket / wire-level failure.
class NetError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated encoded data (wire frame, sink file, codec).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Query over an empty data set.
class NoDataError : public Error {
public:
    using Error::Error;
};

/// Configuration problem (bad handler spec, bad plan, duplicate channel...).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cp
