#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tcpnc/tcp_reno.hpp"

// Single-flow simulation of the measurement setup:
//
//   TCP sender [-> encoder] -> loss element -> drop-tail queue -> link -> [decoder ->] TCP receiver
//   TCP sender <------------------------- return link <------------------------------- ACKs
//
// Losses are injected before the bottleneck queue so they are independent of
// congestion. Time is integer nanoseconds; all randomness comes from the seed.
namespace tcpnc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Mode { tcp, tcpnc };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);  // throws ConfigError

struct SimConfig {
  double loss_rate = 0.0;          // forward Bernoulli loss, p_e
  double link_rate = 6'000'000.0;  // bits/s
  std::size_t bottleneck_queue = 5;
  double prop_delay = 0.010;  // one-way, seconds
  double duration = 20.0;     // seconds
  std::uint64_t seed = 1;
  Mode mode = Mode::tcp;
  double redundancy = 1.0;
  unsigned window = 1;
  std::uint32_t mss = 1460;
  std::size_t encoder_cap = 100;
  std::size_t decoder_cap = 100;

  double reverse_loss_rate = 0.0;
  std::uint64_t stream_bytes = 0;  // 0: unlimited backlog
  double short_segment_prob = 0.0;
  double repacketize_prob = 0.0;
  bool delayed_ack = true;  // plain TCP receiver only; TCP/NC ACKs every frame
  std::uint32_t receiver_buffer = 1u << 20;
  unsigned max_consecutive_timeouts = 5;
  // Coding CPU time, nanoseconds. Each coded packet the encoder builds and
  // each frame the decoder processes costs per_packet + per_symbol * L * n,
  // where L is the coded payload length and n the number of mixed packets.
  double coding_ns_per_packet = 3.5e6;
  double coding_ns_per_symbol = 0.0;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

struct SessionMetrics {
  double goodput_bps = 0.0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t coded_sent = 0;
  std::uint64_t forward_frames = 0;
  std::uint64_t losses_injected = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t frames_delivered = 0;
  std::uint64_t frames_in_flight = 0;
  std::uint64_t max_queue_depth = 0;
  std::uint64_t reverse_frames = 0;
  std::uint64_t reverse_losses = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t visible_losses = 0;  // retransmission events seen by TCP
  std::uint64_t innovative = 0;
  std::uint64_t non_innovative = 0;
  bool completed = false;
  bool stream_intact = true;  // every delivered byte matched the source
  std::uint64_t delivered_digest = 0;
  std::uint64_t trace_digest = 0;

  friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

// FNV-1a, used for stream and trace digests.
class Digest {
 public:
  void update(std::uint8_t byte) {
    state_ ^= byte;
    state_ *= 0x100000001B3ull;
  }
  void update_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) update(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ull;
};

// Runs one session to cfg.duration. A session that aborts after repeated
// retransmission timeouts (or, for finite streams, does not finish) reports
// completed = false. Throws ConfigError for invalid configurations.
SessionMetrics run_session(const SimConfig& cfg);

}  // namespace tcpnc
