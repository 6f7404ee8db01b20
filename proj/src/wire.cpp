#include "saia/wire.hpp"

#include <sys/socket.h>

#include <cerrno>
#include <cstring>

#include <json.hpp>

#include "saia/error.hpp"

namespace saia::wire {

using nlohmann::json;

namespace {

void send_all(int fd, const char* data, std::size_t len) {
    while (len > 0) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorKind::TransportFailure, std::string("send: ") + std::strerror(errno));
        }
        data += n;
        len -= static_cast<std::size_t>(n);
    }
}

/// False on EOF before any byte was read.
bool recv_all(int fd, char* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorKind::TransportFailure, std::string("recv: ") + std::strerror(errno));
        }
        if (n == 0) {
            if (got == 0) return false;
            throw Error(ErrorKind::TransportFailure, "connection closed mid-frame");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

std::string encode_frame(std::string_view payload) {
    if (payload.size() > kMaxFrame) throw Error(ErrorKind::ProtocolError, "frame too large");
    const auto len = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(4 + payload.size());
    out.push_back(static_cast<char>((len >> 24) & 0xff));
    out.push_back(static_cast<char>((len >> 16) & 0xff));
    out.push_back(static_cast<char>((len >> 8) & 0xff));
    out.push_back(static_cast<char>(len & 0xff));
    out.append(payload);
    return out;
}

std::optional<std::string> read_frame(int fd) {
    unsigned char header[4];
    if (!recv_all(fd, reinterpret_cast<char*>(header), 4)) return std::nullopt;
    const std::uint32_t len = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                              (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
    if (len > kMaxFrame) throw Error(ErrorKind::ProtocolError, "frame length " + std::to_string(len) + " exceeds limit");
    std::string payload(len, '\0');
    if (len > 0 && !recv_all(fd, payload.data(), len)) {
        throw Error(ErrorKind::TransportFailure, "connection closed mid-frame");
    }
    return payload;
}

void write_frame(int fd, std::string_view payload) {
    const auto frame = encode_frame(payload);
    send_all(fd, frame.data(), frame.size());
}

std::string predict_request(const Sample& sample) {
    return json{{"op", "predict"}, {"id", sample.id}, {"features", sample.features}}.dump();
}

Sample parse_predict_request(const std::string& payload) {
    json doc;
    try {
        doc = json::parse(payload);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolError, std::string("request is not JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("op", "") != "predict") throw Error(ErrorKind::ProtocolError, "unsupported op");
    if (!doc.contains("id") || !doc["id"].is_string()) throw Error(ErrorKind::ProtocolError, "request id missing");
    if (!doc.contains("features") || !doc["features"].is_array()) {
        throw Error(ErrorKind::ProtocolError, "request features missing");
    }
    Sample s;
    s.id = doc["id"].get<std::string>();
    for (const auto& v : doc["features"]) {
        if (!v.is_number()) throw Error(ErrorKind::ProtocolError, "non-numeric feature");
        s.features.push_back(v.get<double>());
    }
    return s;
}

std::string predict_response(const std::string& id, const EnsemblePrediction& prediction) {
    return json{{"id", id}, {"probs", prediction.scores}, {"class", prediction.label}}.dump();
}

std::string error_response(const std::string& id, const std::string& message) {
    return json{{"id", id}, {"error", message}}.dump();
}

std::variant<PredictReply, ErrorReply> parse_response(const std::string& payload) {
    try {
        const json doc = json::parse(payload);
        const std::string id = doc.at("id").get<std::string>();
        if (doc.contains("error")) return ErrorReply{id, doc["error"].get<std::string>()};
        PredictReply r{id, {}};
        r.prediction.scores = doc.at("probs").get<std::vector<double>>();
        r.prediction.label = doc.at("class").get<int>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolError, std::string("bad response: ") + e.what());
    }
}

std::string handle_request(const Ensemble& ensemble, const std::string& payload) {
    std::string id;
    try {
        const auto doc = json::parse(payload, nullptr, false);
        if (doc.is_object() && doc.contains("id") && doc["id"].is_string()) id = doc["id"].get<std::string>();
        const Sample s = parse_predict_request(payload);
        return predict_response(s.id, ensemble_predict(ensemble, s));
    } catch (const std::exception& e) {
        return error_response(id, e.what());
    }
}

}  // namespace saia::wire
