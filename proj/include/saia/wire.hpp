#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "saia/core.hpp"
#include "saia/fusion.hpp"

namespace saia::wire {

/// Frames larger than this are rejected.
inline constexpr std::uint32_t kMaxFrame = 16u << 20;

/// 4-byte big-endian length, then the payload.
std::string encode_frame(std::string_view payload);

/// Blocking frame I/O on a connected socket. read_frame returns nullopt on a
/// clean close before the first header byte.
std::optional<std::string> read_frame(int fd);
void write_frame(int fd, std::string_view payload);

std::string predict_request(const Sample& sample);

/// Parses a request payload into an unlabeled sample. ProtocolError on bad input.
Sample parse_predict_request(const std::string& payload);

std::string predict_response(const std::string& id, const EnsemblePrediction& prediction);
std::string error_response(const std::string& id, const std::string& message);

struct ErrorReply {
    std::string id;
    std::string message;
};

struct PredictReply {
    std::string id;
    EnsemblePrediction prediction;
};

/// ProtocolError when the payload is neither reply shape.
std::variant<PredictReply, ErrorReply> parse_response(const std::string& payload);

/// Request handler used by the server: always returns a response payload.
std::string handle_request(const Ensemble& ensemble, const std::string& payload);

}  // namespace saia::wire
