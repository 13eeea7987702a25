#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsoftmax/param_server.hpp"

namespace dsoftmax {

// Blocking client for the PsServer socket protocol. Not thread-safe; use one
// client per thread.
class PsClient {
 public:
  PsClient(const std::string& host, std::uint16_t port);
  ~PsClient();

  PsClient(const PsClient&) = delete;
  PsClient& operator=(const PsClient&) = delete;

  struct Info {
    std::uint64_t num_classes = 0;
    std::uint64_t dim = 0;
    std::uint64_t num_shards = 0;
  };

  Info info();
  std::vector<WeightRecord> fetch(std::span<const std::uint64_t> ids);
  std::vector<PushOutcome> push_blind(std::span<const PushRequest> updates);
  std::vector<PushOutcome> push_versioned(std::span<const PushRequest> updates);
  void snapshot(const std::string& server_side_path);

  // Sends a raw payload and returns the raw response; test hook for protocol
  // error handling.
  std::string roundtrip_raw(const std::string& payload);

 private:
  std::string request(const std::string& payload);
  std::vector<PushOutcome> push(std::uint8_t op,
                                std::span<const PushRequest> updates);

  int fd_ = -1;
};

}  // namespace dsoftmax
