#pragma once

#include <cstdint>

// Wire protocol for the parameter-server socket front end. Every message is a
// frame: payload length (u32 LE, excluding itself) followed by the payload.
// All integers little-endian, reals IEEE-754 binary64 LE.
//
// Requests (eight-bit op code first):
//   kFetch:         op, count u32, count x id u64
//   kPushBlind:     op, count u32, dim u32, count x [id u64, dim x f64]
//   kPushVersioned: op, count u32, dim u32,
//                   count x [id u64, expected_version u64, dim x f64]
//   kInfo:          op
//   kSnapshot:      op, path_len u32, path bytes (server-side path)
//
// Responses (status byte first; nonzero status is followed by msg_len u32 and
// a UTF-8 message, and the connection stays usable):
//   kFetch:         0, count u32, dim u32, count x [id u64, version u64, dim x f64]
//   kPushBlind:     0, count u32, count x [id u64, applied u8, version u64]
//   kPushVersioned: same as kPushBlind (applied = 0 means stale-rejected)
//   kInfo:          0, classes u64, dim u64, shards u64
//   kSnapshot:      0

namespace dsoftmax::ps {

inline constexpr std::uint8_t kFetch = 1;
inline constexpr std::uint8_t kPushBlind = 2;
inline constexpr std::uint8_t kPushVersioned = 3;
inline constexpr std::uint8_t kInfo = 4;
inline constexpr std::uint8_t kSnapshot = 5;

inline constexpr std::uint8_t kStatusOk = 0;
inline constexpr std::uint8_t kStatusError = 1;

// Frames beyond this are treated as a framing attack / corruption and the
// connection is dropped (there is no way to resynchronize the stream).
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 28;

}  // namespace dsoftmax::ps
