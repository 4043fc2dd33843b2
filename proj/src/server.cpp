#include "cablelift/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace cablelift::teleop {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kMaxQueuedFrames = 256;

class Session;

// State the sessions share; touched only on the io thread apart from the
// mailbox.
struct Hub {
  Mailbox mailbox;
  CommandBounds bounds;
  std::set<std::shared_ptr<Session>> sessions;
  int next_id = 0;
};

}  // namespace

struct Server::Impl {
  Impl(Scenario scenario, ServerOptions opts)
      : options(std::move(opts)), loop(std::move(scenario), options.loop, hub.mailbox), acceptor(ioc) {
    hub.bounds = bounds_for(loop.sim());
  }

  void accept();
  void broadcast(std::shared_ptr<const std::string> frame);
  void run_loop();

  ServerOptions options;
  Hub hub;
  TeleopLoop loop;
  asio::io_context ioc;
  tcp::acceptor acceptor;

  std::ofstream record;
  std::thread io_thread, loop_thread;
  std::atomic<bool> stopping{false};
  bool started = false;

  mutable std::mutex mu;
  std::condition_variable done_cv;
  bool done = false;
  std::exception_ptr failure;
  PacingStats stats;
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub) : stream_(std::move(socket)), hub_(hub) {}

  void start() { read_request(); }

  void send(std::shared_ptr<const std::string> frame) {
    if (!ws_ || closed_) return;
    if (queue_.size() >= kMaxQueuedFrames) return;  // slow client; newest frame skipped
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) write_next();
  }

  void close() {
    if (!ws_ || closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(*ws_).socket().close(ec);
  }

 private:
  void read_request() {
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->on_request();
                     });
  }

  void on_request() {
    if (request_.target() != "/ws" || !websocket::is_upgrade(request_)) {
      auto res = std::make_shared<http::response<http::string_body>>(
          request_.target() == "/ws" ? http::status::upgrade_required : http::status::not_found,
          request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = request_.target() == "/ws" ? "websocket upgrade required\n" : "not found\n";
      res->keep_alive(false);
      res->prepare_payload();
      http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_both, ignored);
      });
      return;
    }
    ws_.emplace(std::move(stream_));
    ws_->set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_->async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_accept();
    });
  }

  void on_accept() {
    id_ = hub_.next_id++;
    hub_.sessions.insert(shared_from_this());
    hub_.mailbox.post(Mailbox::Connected{id_});
    buffer_.clear();
    read_frame();
  }

  void read_frame() {
    ws_->async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->on_closed();
        return;
      }
      self->on_frame();
    });
  }

  void on_frame() {
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    ParseResult r = accept_command(text, hub_.bounds, last_seq_);
    if (const auto* cmd = std::get_if<CommandMessage>(&r)) {
      hub_.mailbox.post(Mailbox::Command{id_, *cmd});
    } else {
      send(std::make_shared<const std::string>(error_frame(std::get<ProtocolError>(r)).dump()));
    }
    read_frame();
  }

  void on_closed() {
    closed_ = true;
    if (hub_.sessions.erase(shared_from_this())) hub_.mailbox.post(Mailbox::Disconnected{id_});
  }

  void write_next() {
    ws_->text(true);
    ws_->async_write(asio::buffer(*queue_.front()),
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->queue_.pop_front();
                       if (ec) {
                         self->queue_.clear();
                         return;
                       }
                       if (!self->queue_.empty()) self->write_next();
                     });
  }

  beast::tcp_stream stream_;
  std::optional<websocket::stream<beast::tcp_stream>> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  Hub& hub_;
  std::int64_t last_seq_ = -1;
  int id_ = -1;
  bool closed_ = false;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Session>(std::move(socket), hub)->start();
    accept();
  });
}

void Server::Impl::broadcast(std::shared_ptr<const std::string> frame) {
  asio::post(ioc, [this, frame = std::move(frame)] {
    for (const auto& s : hub.sessions) s->send(frame);
  });
}

// Paced per control period. A late period is followed immediately by the
// next one until the loop is back on schedule; no physics step is skipped.
void Server::Impl::run_loop() {
  const double period = loop.steps_per_control() * loop.sim().scenario().dt;
  const auto period_d = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(period));
  const auto start = Clock::now();
  std::int64_t periods = 0, overruns = 0, reported = 0;
  double lag_sum = 0.0, max_lag = 0.0;
  auto last_report = start;
  try {
    while (!stopping.load()) {
      for (std::int64_t k = 0; k < loop.steps_per_control(); ++k) loop.step();
      ++periods;
      const auto deadline = start + periods * period_d;
      const auto now = Clock::now();
      if (now > deadline) {
        const double lag = std::chrono::duration<double>(now - deadline).count();
        ++overruns;
        lag_sum += lag;
        max_lag = std::max(max_lag, lag);
      } else {
        std::this_thread::sleep_until(deadline);
      }
      if (overruns > reported && now - last_report > std::chrono::seconds(1)) {
        std::fprintf(stderr, "teleop: %lld overrun periods so far (max lag %.3f ms) at t=%.3f s\n",
                     static_cast<long long>(overruns), 1e3 * max_lag, loop.sim().time());
        reported = overruns;
        last_report = now;
      }
      std::lock_guard lock(mu);
      stats = {periods, overruns, lag_sum / static_cast<double>(periods), max_lag};
    }
  } catch (...) {
    std::lock_guard lock(mu);
    failure = std::current_exception();
  }
  if (overruns > reported) {
    std::fprintf(stderr, "teleop: %lld overrun periods (max lag %.3f ms)\n", static_cast<long long>(overruns),
                 1e3 * max_lag);
  }
  std::lock_guard lock(mu);
  done = true;
  done_cv.notify_all();
}

Server::Server(Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  if (s.started) return;
  const tcp::endpoint endpoint(asio::ip::make_address(s.options.address), s.options.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(asio::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen();
  if (!s.options.record_path.empty()) {
    s.record.open(s.options.record_path);
    if (!s.record) throw std::runtime_error("cannot open recording " + s.options.record_path);
    s.loop.set_recorder(&s.record);
  }
  s.loop.set_snapshot_sink(
      [&s](const nlohmann::json& frame) { s.broadcast(std::make_shared<const std::string>(frame.dump())); });
  s.accept();
  s.started = true;
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.loop_thread = std::thread([&s] { s.run_loop(); });
}

void Server::stop() {
  Impl& s = *impl_;
  if (!s.started) return;
  s.started = false;
  s.stopping = true;
  if (s.loop_thread.joinable()) s.loop_thread.join();
  asio::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
    for (const auto& session : s.hub.sessions) session->close();
    s.hub.sessions.clear();
  });
  asio::post(s.ioc, [&s] { s.ioc.stop(); });
  if (s.io_thread.joinable()) s.io_thread.join();
  if (s.record.is_open()) s.record.flush();
}

void Server::wait() {
  Impl& s = *impl_;
  std::unique_lock lock(s.mu);
  s.done_cv.wait(lock, [&s] { return s.done; });
  if (s.failure) std::rethrow_exception(s.failure);
}

bool Server::wait_for(std::chrono::milliseconds timeout) {
  Impl& s = *impl_;
  std::unique_lock lock(s.mu);
  if (!s.done_cv.wait_for(lock, timeout, [&s] { return s.done; })) return false;
  if (s.failure) std::rethrow_exception(s.failure);
  return true;
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

PacingStats Server::stats() const {
  std::lock_guard lock(impl_->mu);
  return impl_->stats;
}

}  // namespace cablelift::teleop
