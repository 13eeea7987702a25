#pragma once

#include <atomic>
#include <array>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "dsoftmax/param_server.hpp"

namespace dsoftmax {

// TCP front end for a WeightStore. One thread per connection; the store's own
// shard locking provides consistency, so concurrent clients follow the store
// contract.
class PsServer {
 public:
  // Binds immediately (port 0 picks a free port); serving starts with start().
  PsServer(WeightStore& store, const std::string& bind_address, std::uint16_t port);
  ~PsServer();

  PsServer(const PsServer&) = delete;
  PsServer& operator=(const PsServer&) = delete;

  void start();
  void stop();

  std::uint16_t port() const { return port_; }

  // Per-op counters indexed by op code (0 counts malformed requests).
  std::array<std::uint64_t, 6> op_counts() const;

 private:
  void accept_loop();
  void serve_connection(int fd);
  std::string handle_request(const std::string& payload);

  WeightStore& store_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::mutex workers_mu_;
  mutable std::array<std::atomic<std::uint64_t>, 6> counts_{};
};

}  // namespace dsoftmax
