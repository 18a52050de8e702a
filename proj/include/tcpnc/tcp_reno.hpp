#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tcpnc/random.hpp"
#include "tcpnc/segment.hpp"

// Plain Reno: slow start, congestion avoidance, fast retransmit on the third
// duplicate ACK, fast recovery with window inflation, RTO with exponential
// backoff. No SACK, no window scaling, no timestamps, no Nagle.
namespace tcpnc {

using SimTime = std::chrono::nanoseconds;

// Bytes of the iperf-like source, as a function of stream offset only.
std::uint8_t stream_byte(std::uint64_t seed, std::uint64_t offset);

struct RenoSenderConfig {
  std::uint32_t mss = 1460;
  std::uint32_t initial_cwnd = 2 * 1460;
  std::uint32_t initial_ssthresh = 65535;
  std::uint32_t initial_peer_window = 65535;
  SimTime initial_rto = std::chrono::seconds(1);
  SimTime min_rto = std::chrono::milliseconds(200);
  SimTime max_rto = std::chrono::seconds(60);
  // Probability that a new segment is a short PUSH segment.
  double short_segment_prob = 0.0;
  // Probability that a retransmission spans original segment boundaries.
  double repacketize_prob = 0.0;
  std::uint64_t stream_bytes = 0;  // 0: unlimited backlog
  unsigned max_consecutive_timeouts = 5;
  SeqNum isn = 0;
  bool handshake = true;
  std::uint16_t src_port = 5001;
  std::uint16_t dst_port = 5201;
  std::uint64_t seed = 1;
};

struct RenoSenderStats {
  std::uint64_t segments_sent = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t protocol_errors = 0;
};

class RenoSender {
 public:
  enum class State { closed, syn_sent, established, finished, aborted };

  explicit RenoSender(const RenoSenderConfig& config);

  // Opens the connection: a SYN, or the first window of data when the
  // handshake is disabled.
  std::vector<Segment> start(SimTime now);
  std::vector<Segment> on_ack(const Ack& ack, SimTime now);
  // Retransmission timer expiry. Empty when nothing is outstanding.
  std::vector<Segment> on_timeout(SimTime now);

  std::optional<SimTime> rto_deadline() const { return rto_deadline_; }

  State state() const { return state_; }
  SeqNum first_data_seq() const { return config_.isn + 1; }
  SeqNum snd_una() const { return snd_una_; }
  SeqNum snd_nxt() const { return snd_nxt_; }
  SeqNum snd_max() const { return snd_max_; }
  std::uint32_t flight() const { return snd_nxt_ - snd_una_; }
  std::uint32_t cwnd() const { return cwnd_; }
  std::uint32_t ssthresh() const { return ssthresh_; }
  std::uint32_t peer_window() const { return peer_window_; }
  unsigned dupacks() const { return dupacks_; }
  bool in_recovery() const { return in_recovery_; }
  SimTime rto() const { return rto_; }
  std::optional<SimTime> srtt() const { return srtt_; }
  const RenoSenderStats& stats() const { return stats_; }
  const RenoSenderConfig& config() const { return config_; }

 private:
  Segment make_segment(SeqNum seq, std::uint32_t len, std::uint8_t extra_flags) const;
  Segment retransmit_head();
  void fill_window(SimTime now, std::vector<Segment>& out);
  void record_sent(SeqNum seq, std::uint32_t len);
  void sample_rtt(SimTime rtt);
  void arm(SimTime now) { rto_deadline_ = now + rto_; }
  std::uint64_t stream_end() const;

  RenoSenderConfig config_;
  State state_ = State::closed;
  SeqNum snd_una_;
  SeqNum snd_nxt_;
  SeqNum snd_max_;
  std::uint32_t cwnd_;
  std::uint32_t ssthresh_;
  std::uint32_t peer_window_;
  unsigned dupacks_ = 0;
  bool in_recovery_ = false;
  unsigned consecutive_timeouts_ = 0;

  SimTime rto_;
  std::optional<SimTime> srtt_;
  SimTime rttvar_{0};
  std::optional<SimTime> rto_deadline_;
  // Karn: one timed segment at a time, never a retransmitted one.
  std::optional<SeqNum> timed_seq_;
  SimTime timed_at_{0};
  SimTime syn_sent_at_{0};
  bool syn_retransmitted_ = false;

  std::map<SeqNum, std::uint32_t> sent_;  // start -> length of last transmission
  rnd::Engine rng_;
  RenoSenderStats stats_;
};

struct RenoReceiverConfig {
  bool delayed_ack = false;
  SimTime delayed_ack_timeout = std::chrono::milliseconds(200);
  std::uint32_t buffer_bytes = 65535;
  SeqNum initial_seq = 0;  // expected first byte until a SYN says otherwise
};

struct ReceiverOutput {
  std::optional<Ack> ack;
  std::vector<std::uint8_t> in_order;  // newly deliverable application bytes
};

class RenoReceiver {
 public:
  explicit RenoReceiver(const RenoReceiverConfig& config = {});

  ReceiverOutput on_segment(const Segment& seg, SimTime now);
  std::optional<Ack> on_delayed_ack_timer(SimTime now);
  std::optional<SimTime> delayed_ack_deadline() const { return delack_deadline_; }

  SeqNum rcv_nxt() const { return rcv_nxt_; }
  std::uint32_t window() const;
  std::vector<std::pair<SeqNum, SeqNum>> out_of_order() const;  // [start, end) ranges

 private:
  Ack make_ack(std::uint8_t flags = tcp_flag::kAck);
  void store(SeqNum seq, const std::uint8_t* data, std::uint32_t len);

  RenoReceiverConfig config_;
  SeqNum rcv_nxt_;
  std::map<SeqNum, std::vector<std::uint8_t>> ooo_;
  std::uint32_t ooo_bytes_ = 0;
  unsigned pending_ = 0;
  std::optional<SimTime> delack_deadline_;
};

}  // namespace tcpnc
