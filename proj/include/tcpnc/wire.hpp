#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tcpnc/gf256.hpp"
#include "tcpnc/segment.hpp"

// Byte layouts shared by the encoder, the decoder and the simulated network.
//
// Coding header, big-endian:
//
//   src_port(2) dst_port(2)                      <- not counted as overhead
//   base(4) n(1)
//   start_1(4) end_1-start_1(2) coeff_1(1)
//   { start_i-end_{i-1}(2) end_i-start_i(2) coeff_i(1) }  for i = 2..n
//
// which is 4 + 5n + 7 bytes. The coded payload follows immediately; its
// length is carried by the enclosing frame.
namespace tcpnc::wire {

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CodingEntry {
  SeqNum start = 0;
  SeqNum end = 0;  // inclusive
  gf256::Element coeff = 0;

  std::uint32_t length() const { return end - start + 1; }
  friend bool operator==(const CodingEntry&, const CodingEntry&) = default;
};

struct CodingHeaderMeta {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  SeqNum base = 0;
  std::vector<CodingEntry> entries;

  std::size_t n() const { return entries.size(); }
  friend bool operator==(const CodingHeaderMeta&, const CodingHeaderMeta&) = default;
};

// A coded frame, or a raw SYN/RST segment that skipped the coding buffer.
struct CodedPacket {
  CodingHeaderMeta header;
  std::vector<std::uint8_t> payload;
  bool control_bypass = false;
  Segment control;  // valid only when control_bypass

  friend bool operator==(const CodedPacket&, const CodedPacket&) = default;
};

struct DecodedHeader {
  CodingHeaderMeta meta;
  std::size_t payload_offset = 0;
};

inline constexpr std::size_t kPortBytes = 4;
inline constexpr std::size_t kMaxEntries = 255;
// TCP header minus the ports: seq(4) ack(4) offset(1) flags(1) window(2)
// checksum(2) urgent(2).
inline constexpr std::size_t kSubheaderBytes = 16;
inline constexpr std::size_t kSegmentHeaderBytes = kPortBytes + kSubheaderBytes;

/// Coding overhead excluding ports: 5n + 7.
std::size_t header_overhead(std::size_t n);
/// Full encoded header length including ports: 4 + 5n + 7.
std::size_t encoded_header_size(std::size_t n);

// Throws WireError if the meta violates ordering, n or 16-bit offset limits.
std::vector<std::uint8_t> encode_header(const CodingHeaderMeta& meta);
void validate(const CodingHeaderMeta& meta);

// Throws WireError on truncation, n == 0, or overlapping ranges.
DecodedHeader decode_header(std::span<const std::uint8_t> bytes);

// Header followed by payload.
std::vector<std::uint8_t> encode_coded(const CodedPacket& pkt);
CodedPacket decode_coded(std::span<const std::uint8_t> bytes);

// The 16-byte TCP subheader that is coded together with the payload.
void encode_subheader(const Segment& seg, std::span<std::uint8_t, kSubheaderBytes> out);
// Fills every field of Segment except the ports and payload.
Segment decode_subheader(std::span<const std::uint8_t> bytes);

// Plain segment: ports, subheader, payload. Used for bypass frames.
std::vector<std::uint8_t> encode_segment(const Segment& seg);
Segment decode_segment(std::span<const std::uint8_t> bytes);

}  // namespace tcpnc::wire
