#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

// Little-endian byte packing shared by the snapshot formats and the
// parameter-server socket protocol.

namespace dsoftmax::wire {

inline void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

class ReadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cursor over a byte buffer; reads throw ReadError on underflow.
class Reader {
 public:
  Reader(const char* data, std::size_t size) : p_(data), n_(size) {}
  explicit Reader(const std::string& buf) : Reader(buf.data(), buf.size()) {}

  std::size_t remaining() const { return n_ - off_; }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(p_[off_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p_[off_ + i])) << (8 * i);
    off_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p_[off_ + i])) << (8 * i);
    off_ += 8;
    return v;
  }

  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string bytes(std::size_t count) {
    need(count);
    std::string s(p_ + off_, count);
    off_ += count;
    return s;
  }

 private:
  void need(std::size_t count) const {
    if (off_ + count > n_) throw ReadError("wire: message truncated");
  }

  const char* p_;
  std::size_t n_;
  std::size_t off_ = 0;
};

}  // namespace dsoftmax::wire
