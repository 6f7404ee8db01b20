#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "saia/core.hpp"
#include "saia/fusion.hpp"

namespace saia {

struct Endpoint {
    std::string host = "127.0.0.1";
    int port = 0;

    std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// host:port, port in [0, 65535].
Endpoint parse_endpoint(const std::string& text);

/// Client-side view of the networked AI.
class EnsembleClient {
public:
    virtual ~EnsembleClient() = default;
    virtual EnsemblePrediction predict(const Sample& sample) = 0;
    virtual int class_count() const = 0;
};

class InProcessClient final : public EnsembleClient {
public:
    explicit InProcessClient(const Ensemble& ensemble) : ensemble_(ensemble) {}
    EnsemblePrediction predict(const Sample& sample) override { return ensemble_predict(ensemble_, sample); }
    int class_count() const override { return ensemble_.class_count(); }

private:
    const Ensemble& ensemble_;
};

/// One persistent TCP connection; requests are answered in order.
class SocketClient final : public EnsembleClient {
public:
    SocketClient(const Endpoint& endpoint, int class_count);
    ~SocketClient() override;
    SocketClient(const SocketClient&) = delete;
    SocketClient& operator=(const SocketClient&) = delete;

    /// TransportFailure on socket errors, MissingPrediction/ProtocolError on error replies.
    EnsemblePrediction predict(const Sample& sample) override;
    int class_count() const override { return class_count_; }

    void send_payload(std::string_view payload);
    std::string receive_payload();
    void close();

private:
    int fd_ = -1;
    int class_count_;
};

/// Answers predict requests on a TCP port with one thread per connection.
class EnsembleServer {
public:
    /// Port 0 binds an ephemeral port. BindFailure when the endpoint is unavailable.
    EnsembleServer(const Ensemble& ensemble, const Endpoint& endpoint);
    ~EnsembleServer();
    EnsembleServer(const EnsembleServer&) = delete;
    EnsembleServer& operator=(const EnsembleServer&) = delete;

    Endpoint endpoint() const { return bound_; }
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    const Ensemble& ensemble_;
    Endpoint bound_;
    int listen_fd_ = -1;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::vector<int> connections_;
    std::vector<std::thread> workers_;
};

std::unique_ptr<EnsembleServer> serve_ensemble(const Ensemble& ensemble, const Endpoint& endpoint);

}  // namespace saia
