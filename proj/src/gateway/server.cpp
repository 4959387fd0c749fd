#include "atract/gateway/server.hpp"

#include <poll.h>

#include <istream>

#include "atract/common/error.hpp"

namespace atract::gateway {

namespace asio = boost::asio;
using asio::ip::tcp;

class Server::Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Server& server) : socket_(std::move(socket)), server_(server) {}

    void start() { read(); }

    void send(std::string message) {
        queue_.push_back(std::move(message));
        if (!writing_) write();
    }

    void close() {
        boost::system::error_code ec;
        socket_.shutdown(tcp::socket::shutdown_both, ec);
        socket_.close(ec);
    }

private:
    void read() {
        asio::async_read_until(socket_, buffer_, '\n', [self = shared_from_this()](auto ec, std::size_t) {
            if (ec) {
                self->server_.clients_.erase(self);
                return;
            }
            std::istream in(&self->buffer_);
            std::string line;
            std::getline(in, line);
            if (!line.empty()) self->server_.on_line(self, line);
            self->read();
        });
    }

    void write() {
        writing_ = true;
        asio::async_write(socket_, asio::buffer(queue_.front()), [self = shared_from_this()](auto ec, std::size_t) {
            if (ec) {
                self->server_.clients_.erase(self);
                return;
            }
            self->queue_.pop_front();
            if (self->queue_.empty())
                self->writing_ = false;
            else
                self->write();
        });
    }

    tcp::socket socket_;
    Server& server_;
    asio::streambuf buffer_;
    std::deque<std::string> queue_;
    bool writing_ = false;
};

Server::Server(asio::io_context& io, Gateway& gateway, Options options)
    : io_(io), gateway_(gateway), options_(std::move(options)), acceptor_(io), timer_(io) {
    validate(options_.replay);
    schedule_ = build_schedule(gateway_.session(), options_.replay);
    const tcp::endpoint ep(asio::ip::make_address(options_.address), options_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(tcp::acceptor::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
}

Server::~Server() = default;

unsigned short Server::port() const { return acceptor_.local_endpoint().port(); }

void Server::start() {
    accept();
    if (options_.wait_for_clients == 0) start_replay();
}

void Server::stop() {
    boost::system::error_code ec;
    acceptor_.close(ec);
    timer_.cancel();
    for (const auto& c : clients_) c->close();
    clients_.clear();
}

void Server::accept() {
    acceptor_.async_accept([this](auto ec, tcp::socket socket) {
        if (ec) return;
        auto conn = std::make_shared<Connection>(std::move(socket), *this);
        clients_.insert(conn);
        conn->send(gateway_.greeting(stream_time()));
        conn->start();
        if (!started_ && clients_.size() >= options_.wait_for_clients) start_replay();
        accept();
    });
}

double Server::stream_time() const {
    if (!started_) return 0.0;
    return std::chrono::duration<double>(Clock::now() - t0_).count() * options_.replay.speed;
}

void Server::start_replay() {
    started_ = true;
    t0_ = Clock::now();
    schedule_next();
}

void Server::schedule_next() {
    if (next_ >= schedule_.size()) {
        finished_ = true;
        replay_wall_ = std::chrono::duration<double>(Clock::now() - t0_).count();
        broadcast(encode_end(schedule_.empty() ? 0.0 : schedule_.back().t));
        return;
    }
    const auto due = t0_ + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(schedule_[next_].t / options_.replay.speed));
    timer_.expires_at(due);
    timer_.async_wait([this](auto ec) {
        if (ec) return;
        const double t = schedule_[next_].t;
        while (next_ < schedule_.size() && schedule_[next_].t == t) {
            for (const auto& m : gateway_.on_event(schedule_[next_])) broadcast(m);
            ++next_;
        }
        schedule_next();
    });
}

void Server::broadcast(const std::string& message) {
    for (const auto& c : clients_) c->send(message);
}

void Server::on_line(const std::shared_ptr<Connection>& from, const std::string& line) {
    const auto reply = gateway_.handle_client_line(line);
    for (const auto& m : reply.broadcast) broadcast(m);
    if (!reply.direct.empty()) from->send(reply.direct);
}

LineClient::LineClient(const std::string& host, unsigned short port) : socket_(io_) {
    tcp::resolver resolver(io_);
    asio::connect(socket_, resolver.resolve(host, std::to_string(port)));
}

void LineClient::send(const std::string& line) {
    const std::string data = line.empty() || line.back() != '\n' ? line + '\n' : line;
    asio::write(socket_, asio::buffer(data));
}

std::optional<std::string> LineClient::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        pollfd pfd{socket_.native_handle(), POLLIN, 0};
        if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
        char chunk[4096];
        boost::system::error_code ec;
        const auto n = socket_.read_some(asio::buffer(chunk), ec);
        if (ec) return std::nullopt;
        buffer_.append(chunk, n);
    }
}

}  // namespace atract::gateway
