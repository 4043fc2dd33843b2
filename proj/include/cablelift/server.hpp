#ifndef CABLELIFT_SERVER_HPP_
#define CABLELIFT_SERVER_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "cablelift/teleop.hpp"

namespace cablelift::teleop {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  LoopOptions loop;
  std::string record_path;  // empty: no recording
};

struct PacingStats {
  std::int64_t periods = 0;   // control periods run
  std::int64_t overruns = 0;  // periods that finished past their deadline
  double mean_lag = 0.0;      // s, averaged over all periods
  double max_lag = 0.0;       // s
};

/// WebSocket endpoint /ws in front of a TeleopLoop paced to wall-clock time.
/// Network I/O runs on one thread and the loop on another; they meet only in
/// the mailbox and the snapshot broadcast.
class Server {
 public:
  Server(Scenario scenario, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and launches both threads.
  void start();
  /// Idempotent; joins the threads and flushes the recording.
  void stop();
  /// Blocks until the loop ends; rethrows a loop failure.
  void wait();
  /// As wait() with a timeout; true when the loop has ended.
  bool wait_for(std::chrono::milliseconds timeout);

  [[nodiscard]] unsigned short port() const;
  [[nodiscard]] PacingStats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cablelift::teleop

#endif  // CABLELIFT_SERVER_HPP_
