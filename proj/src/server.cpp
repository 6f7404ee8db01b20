#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "saia/error.hpp"
#include "saia/text.hpp"
#include "saia/transport.hpp"
#include "saia/wire.hpp"

namespace saia {

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw Error(ErrorKind::ConfigError, "endpoint must be host:port");
    auto port = parse_int(std::string_view(text).substr(colon + 1));
    if (!port || *port < 0 || *port > 65535) throw Error(ErrorKind::ConfigError, "bad port in endpoint '" + text + "'");
    return {text.substr(0, colon), static_cast<int>(*port)};
}

namespace {

addrinfo* resolve(const Endpoint& ep, bool passive, ErrorKind kind) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw Error(kind, "cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
    return res;
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

SocketClient::SocketClient(const Endpoint& endpoint, int class_count) : class_count_(class_count) {
    addrinfo* res = resolve(endpoint, false, ErrorKind::TransportFailure);
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw Error(ErrorKind::TransportFailure, "cannot connect to " + endpoint.to_string());
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

SocketClient::~SocketClient() { close(); }

void SocketClient::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void SocketClient::send_payload(std::string_view payload) {
    if (fd_ < 0) throw Error(ErrorKind::TransportFailure, "connection is closed");
    wire::write_frame(fd_, payload);
}

std::string SocketClient::receive_payload() {
    if (fd_ < 0) throw Error(ErrorKind::TransportFailure, "connection is closed");
    auto frame = wire::read_frame(fd_);
    if (!frame) throw Error(ErrorKind::TransportFailure, "server closed the connection");
    return std::move(*frame);
}

EnsemblePrediction SocketClient::predict(const Sample& sample) {
    send_payload(wire::predict_request(sample));
    auto reply = wire::parse_response(receive_payload());
    if (auto* err = std::get_if<wire::ErrorReply>(&reply)) {
        constexpr std::string_view kMissing = "MissingPrediction: ";
        if (err->message.starts_with(kMissing)) {
            throw Error(ErrorKind::MissingPrediction, err->message.substr(kMissing.size()));
        }
        throw Error(ErrorKind::ProtocolError, "server error: " + err->message);
    }
    auto& ok = std::get<wire::PredictReply>(reply);
    if (ok.id != sample.id) throw Error(ErrorKind::ProtocolError, "reply id " + ok.id + " for request " + sample.id);
    if (static_cast<int>(ok.prediction.scores.size()) != class_count_) {
        throw Error(ErrorKind::ProtocolError, "reply has wrong class count");
    }
    return std::move(ok.prediction);
}

EnsembleServer::EnsembleServer(const Ensemble& ensemble, const Endpoint& endpoint) : ensemble_(ensemble) {
    addrinfo* res = resolve(endpoint, true, ErrorKind::BindFailure);
    std::string last_error = "no usable address";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_error = errno_text("socket");
            continue;
        }
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
            listen_fd_ = fd;
            break;
        }
        last_error = errno_text("bind");
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (listen_fd_ < 0) throw Error(ErrorKind::BindFailure, endpoint.to_string() + ": " + last_error);

    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_.host = endpoint.host;
    bound_.port = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                             : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

EnsembleServer::~EnsembleServer() { stop(); }

void EnsembleServer::stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    {
        std::lock_guard lock(mu_);
        for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : workers_) {
        if (t.joinable()) t.join();
    }
}

void EnsembleServer::accept_loop() {
    while (!stopping_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED) continue;
            return;
        }
        if (stopping_) {
            ::close(fd);
            return;
        }
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mu_);
        connections_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void EnsembleServer::serve_connection(int fd) {
    try {
        while (auto payload = wire::read_frame(fd)) {
            wire::write_frame(fd, wire::handle_request(ensemble_, *payload));
        }
    } catch (const Error& e) {
        // An oversized length prefix cannot be resynchronized: report, then drop the connection.
        if (e.kind() == ErrorKind::ProtocolError) {
            try {
                wire::write_frame(fd, wire::error_response("", e.what()));
            } catch (const Error&) {
            }
        }
    }
    std::lock_guard lock(mu_);
    connections_.erase(std::remove(connections_.begin(), connections_.end(), fd), connections_.end());
    ::close(fd);
}

std::unique_ptr<EnsembleServer> serve_ensemble(const Ensemble& ensemble, const Endpoint& endpoint) {
    return std::make_unique<EnsembleServer>(ensemble, endpoint);
}

}  // namespace saia
