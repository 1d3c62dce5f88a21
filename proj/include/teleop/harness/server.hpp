#pragma once

#include "teleop/harness/session.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace teleop::harness {

/// WebSocket service: one Session per connection, text frames carrying JSON messages.
class SessionServer {
 public:
  /// Binds immediately; port 0 picks a free port.
  SessionServer(std::shared_ptr<const SessionResources> resources, const std::string& address, unsigned short port);
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  unsigned short port() const;

  /// Accepts connections until stop(); each connection is served on its own thread.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port" -> (host, port).
std::pair<std::string, unsigned short> parse_bind(const std::string& bind);

}  // namespace teleop::harness
