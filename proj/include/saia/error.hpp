#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace saia {

enum class ErrorKind {
    MalformedRow,
    DuplicateId,
    LabelOutOfRange,
    MixedLabels,
    InvalidArgument,
    EmptyClass,
    ObjectiveMismatch,
    ArityMismatch,
    MalformedModel,
    MissingPrediction,
    RowNotNormalized,
    DuplicateKey,
    DegenerateLabels,
    DegenerateHistogram,
    EmptyMask,
    ImageTooSmall,
    MalformedImage,
    TransportFailure,
    BindFailure,
    ProtocolError,
    ConfigError,
    IoError,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace saia
