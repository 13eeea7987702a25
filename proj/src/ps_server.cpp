#include "dsoftmax/ps_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

#include "dsoftmax/ps_protocol.hpp"
#include "dsoftmax/wire.hpp"

namespace dsoftmax {

namespace {

bool read_exact(int fd, char* buf, std::size_t count) {
  std::size_t got = 0;
  while (got < count) {
    ssize_t r = ::read(fd, buf + got, count - got);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, const char* buf, std::size_t count) {
  std::size_t sent = 0;
  while (sent < count) {
    ssize_t w = ::write(fd, buf + sent, count - sent);
    if (w <= 0) return false;
    sent += static_cast<std::size_t>(w);
  }
  return true;
}

std::string error_response(const std::string& message) {
  std::string out;
  wire::put_u8(out, ps::kStatusError);
  wire::put_u32(out, static_cast<std::uint32_t>(message.size()));
  out += message;
  return out;
}

}  // namespace

PsServer::PsServer(WeightStore& store, const std::string& bind_address,
                   std::uint16_t port)
    : store_(store) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("PsServer: socket() failed");

  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::runtime_error("PsServer: bad bind address " + bind_address);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("PsServer: cannot bind " + bind_address + ":" +
                             std::to_string(port));
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("PsServer: listen() failed");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

PsServer::~PsServer() { stop(); }

void PsServer::start() {
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void PsServer::stop() {
  if (!running_.exchange(false)) {
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard<std::mutex> lock(workers_mu_);
  for (std::thread& t : workers_)
    if (t.joinable()) t.join();
  workers_.clear();
}

std::array<std::uint64_t, 6> PsServer::op_counts() const {
  std::array<std::uint64_t, 6> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = counts_[i].load();
  return out;
}

void PsServer::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard<std::mutex> lock(workers_mu_);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void PsServer::serve_connection(int fd) {
  std::string frame;
  while (running_) {
    char len_bytes[4];
    if (!read_exact(fd, len_bytes, 4)) break;
    std::uint32_t len = wire::Reader(len_bytes, 4).u32();
    if (len == 0 || len > ps::kMaxFrameBytes) break;  // cannot resync; drop
    frame.resize(len);
    if (!read_exact(fd, frame.data(), len)) break;

    std::string response = handle_request(frame);
    std::string framed;
    wire::put_u32(framed, static_cast<std::uint32_t>(response.size()));
    framed += response;
    if (!write_all(fd, framed.data(), framed.size())) break;
  }
  ::close(fd);
}

std::string PsServer::handle_request(const std::string& payload) {
  try {
    wire::Reader r(payload);
    const std::uint8_t op = r.u8();
    switch (op) {
      case ps::kFetch: {
        counts_[ps::kFetch]++;
        const std::uint32_t count = r.u32();
        std::vector<std::uint64_t> ids(count);
        for (auto& id : ids) id = r.u64();
        std::vector<WeightRecord> records = store_.fetch(ids);
        std::string out;
        wire::put_u8(out, ps::kStatusOk);
        wire::put_u32(out, count);
        wire::put_u32(out, static_cast<std::uint32_t>(store_.dim()));
        for (const WeightRecord& rec : records) {
          wire::put_u64(out, rec.class_id);
          wire::put_u64(out, rec.version);
          for (double v : rec.weights) wire::put_f64(out, v);
        }
        return out;
      }
      case ps::kPushBlind:
      case ps::kPushVersioned: {
        counts_[op]++;
        const std::uint32_t count = r.u32();
        const std::uint32_t dim = r.u32();
        if (dim != store_.dim())
          return error_response("push: dimension mismatch");
        std::vector<PushRequest> updates(count);
        for (PushRequest& u : updates) {
          u.class_id = r.u64();
          if (op == ps::kPushVersioned) u.expected_version = r.u64();
          u.delta.resize(dim);
          for (double& v : u.delta) v = r.f64();
        }
        std::vector<PushOutcome> outcomes = store_.push_update(updates);
        std::string out;
        wire::put_u8(out, ps::kStatusOk);
        wire::put_u32(out, count);
        for (const PushOutcome& o : outcomes) {
          wire::put_u64(out, o.class_id);
          wire::put_u8(out, o.status == PushStatus::Applied ? 1 : 0);
          wire::put_u64(out, o.current_version);
        }
        return out;
      }
      case ps::kInfo: {
        counts_[ps::kInfo]++;
        std::string out;
        wire::put_u8(out, ps::kStatusOk);
        wire::put_u64(out, store_.num_classes());
        wire::put_u64(out, store_.dim());
        wire::put_u64(out, store_.num_shards());
        return out;
      }
      case ps::kSnapshot: {
        counts_[ps::kSnapshot]++;
        const std::uint32_t path_len = r.u32();
        std::string path = r.bytes(path_len);
        store_.snapshot(path);
        std::string out;
        wire::put_u8(out, ps::kStatusOk);
        return out;
      }
      default:
        counts_[0]++;
        return error_response("unknown op code");
    }
  } catch (const std::exception& e) {
    counts_[0]++;
    return error_response(e.what());
  }
}

}  // namespace dsoftmax
