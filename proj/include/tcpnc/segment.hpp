#pragma once

#include <cstdint>
#include <vector>

namespace tcpnc {

// Absolute byte sequence number. Sessions are far shorter than 4 GiB, so
// sequence space is treated as linear (no wraparound).
using SeqNum = std::uint32_t;

namespace tcp_flag {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
}  // namespace tcp_flag

// A contiguous run of the sender's byte stream plus TCP control fields.
struct Segment {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  SeqNum seq = 0;
  SeqNum ack = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  std::vector<std::uint8_t> payload;

  bool has(std::uint8_t flag) const { return (flags & flag) != 0; }
  bool is_control() const { return has(tcp_flag::kSyn) || has(tcp_flag::kRst); }
  // Last byte covered, inclusive. Only meaningful for nonempty payloads.
  SeqNum last() const { return seq + static_cast<SeqNum>(payload.size()) - 1; }
  SeqNum next() const { return seq + static_cast<SeqNum>(payload.size()); }

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Cumulative acknowledgement travelling on the return path.
struct Ack {
  SeqNum ack = 0;
  std::uint32_t window = 0;
  std::uint8_t flags = tcp_flag::kAck;

  friend bool operator==(const Ack&, const Ack&) = default;
};

}  // namespace tcpnc
