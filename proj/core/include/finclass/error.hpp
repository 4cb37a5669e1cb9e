// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace finclass {

/// Coarse classification of every failure the library reports. The CLI prints
/// `error_kind_name(kind)` as a stable prefix on stderr.
enum class ErrorKind {
    dimension,
    validation,
    weight,
    format,
    version,
    corruption,
    decode,
    io,
    dataset,
    divergence,
    bind,
};

constexpr std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::validation: return "validation";
        case ErrorKind::weight: return "weight";
        case ErrorKind::format: return "format";
        case ErrorKind::version: return "version";
        case ErrorKind::corruption: return "corruption";
        case ErrorKind::decode: return "decode";
        case ErrorKind::io: return "io";
        case ErrorKind::dataset: return "dataset";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::bind: return "bind";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define FINCLASS_DEFINE_ERROR(Name, Kind)                                           \
    class Name : public Error {                                                     \
    public:                                                                         \
        explicit Name(const std::string& message) : Error(ErrorKind::Kind, message) {} \
    };

FINCLASS_DEFINE_ERROR(DimensionError, dimension)
FINCLASS_DEFINE_ERROR(ValidationError, validation)
FINCLASS_DEFINE_ERROR(WeightError, weight)
FINCLASS_DEFINE_ERROR(FormatError, format)
FINCLASS_DEFINE_ERROR(VersionError, version)
FINCLASS_DEFINE_ERROR(CorruptionError, corruption)
FINCLASS_DEFINE_ERROR(DecodeError, decode)
FINCLASS_DEFINE_ERROR(IoError, io)
FINCLASS_DEFINE_ERROR(DatasetError, dataset)
FINCLASS_DEFINE_ERROR(DivergenceError, divergence)
FINCLASS_DEFINE_ERROR(BindError, bind)

#undef FINCLASS_DEFINE_ERROR

}  // namespace finclass
