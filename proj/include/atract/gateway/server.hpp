#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <boost/asio.hpp>

#include "atract/gateway/gateway.hpp"

namespace atract::gateway {

// TCP front end: every connected client gets hello + snapshot, then the shared
// replay stream; client lines are applied through the gateway and acks are
// broadcast once the decision log has persisted them. Everything runs on the
// io_context thread, so decision writes are serialized.
class Server {
public:
    struct Options {
        std::string address = "127.0.0.1";
        unsigned short port = 0;  // 0 picks a free port
        ReplayOptions replay;
        // Replay starts once this many clients are connected (0: at start()).
        unsigned wait_for_clients = 1;
    };

    Server(boost::asio::io_context& io, Gateway& gateway, Options options);
    ~Server();

    unsigned short port() const;
    void start();
    void stop();

    bool replay_finished() const { return finished_; }
    // Wall time from the first to the last replayed event.
    double replay_wall_seconds() const { return replay_wall_; }

private:
    class Connection;
    using Clock = std::chrono::steady_clock;

    void accept();
    void start_replay();
    void schedule_next();
    void broadcast(const std::string& message);
    void on_line(const std::shared_ptr<Connection>& from, const std::string& line);
    double stream_time() const;

    boost::asio::io_context& io_;
    Gateway& gateway_;
    Options options_;
    boost::asio::ip::tcp::acceptor acceptor_;
    boost::asio::steady_timer timer_;
    std::set<std::shared_ptr<Connection>> clients_;
    std::vector<ReplayEvent> schedule_;
    std::size_t next_ = 0;
    bool started_ = false;
    bool finished_ = false;
    Clock::time_point t0_;
    double replay_wall_ = 0.0;
};

// Blocking newline-delimited client used by tests and tools.
class LineClient {
public:
    LineClient(const std::string& host, unsigned short port);
    void send(const std::string& line);
    // Next message without its newline; empty optional on timeout or EOF.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);

private:
    boost::asio::io_context io_;
    boost::asio::ip::tcp::socket socket_;
    std::string buffer_;
};

}  // namespace atract::gateway
