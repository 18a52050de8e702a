#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tcpnc/random.hpp"
#include "tcpnc/segment.hpp"
#include "tcpnc/wire.hpp"

namespace tcpnc {

// One unknown of the code: a disjoint byte range of the stream with its
// subheader, zero-padded to the longest packet in the buffer.
struct BufferedPacket {
  SeqNum start = 0;
  SeqNum end = 0;  // inclusive
  std::uint64_t index = 0;
  std::vector<std::uint8_t> data;

  std::size_t real_size() const { return wire::kSubheaderBytes + (end - start + 1); }
};

struct EncoderConfig {
  double redundancy = 1.0;  // R, coded packets per TCP arrival on average
  unsigned window = 1;      // W, packets mixed per combination
  std::size_t buffer_cap = 100;
  std::uint64_t seed = 1;
};

struct EncoderStats {
  std::uint64_t arrivals = 0;
  std::uint64_t coded_sent = 0;
  std::uint64_t packets_created = 0;
  std::uint64_t buffer_drops = 0;
  std::uint64_t packets_freed = 0;
};

// Sender side of the coding layer. Not thread-safe; callers serialize.
class Encoder {
 public:
  explicit Encoder(const EncoderConfig& config);

  // Strips bytes already buffered, buffers the rest, then emits coded
  // packets according to the redundancy credit. Throws std::invalid_argument
  // for SYN/RST segments, which must go through bypass_control.
  std::vector<wire::CodedPacket> ingest_segment(const Segment& seg);

  // A random combination over the current coding window, or nullopt when
  // the buffer is empty.
  std::optional<wire::CodedPacket> generate_coded();

  // Frees every packet whose last byte is below ack. Returns the count.
  std::size_t handle_ack(SeqNum ack);

  // Wraps a SYN/RST segment for uncoded passthrough.
  static wire::CodedPacket bypass_control(const Segment& seg);

  const std::deque<BufferedPacket>& buffer() const { return buffer_; }
  // Buffer positions of the packets the next combination would mix.
  std::vector<std::size_t> coding_window() const;
  SeqNum base() const { return base_; }
  double credit() const { return static_cast<double>(credit_) / kCreditUnit; }
  const EncoderStats& stats() const { return stats_; }
  const EncoderConfig& config() const { return config_; }

 private:
  static constexpr std::int64_t kCreditUnit = 1'000'000;

  bool insert(BufferedPacket pkt);
  void repad();

  EncoderConfig config_;
  std::int64_t redundancy_units_;
  std::int64_t credit_ = 0;
  std::deque<BufferedPacket> buffer_;  // sorted by start
  std::size_t padded_size_ = 0;
  std::optional<SeqNum> anchor_;  // start of the most recent arrival
  SeqNum base_ = 0;
  bool base_known_ = false;
  std::uint64_t next_index_ = 0;
  std::uint16_t src_port_ = 0;
  std::uint16_t dst_port_ = 0;
  rnd::Engine rng_;
  EncoderStats stats_;
};

}  // namespace tcpnc
