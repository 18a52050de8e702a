#include "tcpnc/tcp_reno.hpp"

#include <algorithm>
#include <limits>

namespace tcpnc {
namespace {

constexpr std::uint32_t kMaxCwnd = 1u << 30;
constexpr SimTime kClockGranularity = std::chrono::milliseconds(1);

}  // namespace

std::uint8_t stream_byte(std::uint64_t seed, std::uint64_t offset) {
  const auto word = rnd::splitmix64(rnd::splitmix64(seed) ^ (offset >> 3));
  return static_cast<std::uint8_t>(word >> (8 * (offset & 7)));
}

// ---------------------------------------------------------------------------
// RenoSender

RenoSender::RenoSender(const RenoSenderConfig& config)
    : config_(config),
      snd_una_(config.isn),
      snd_nxt_(config.isn),
      snd_max_(config.isn),
      cwnd_(std::max(config.initial_cwnd, config.mss)),
      ssthresh_(config.initial_ssthresh),
      peer_window_(config.initial_peer_window),
      rto_(config.initial_rto),
      rng_(rnd::derive_seed(config.seed, 0x5E9D)) {}

std::uint64_t RenoSender::stream_end() const {
  if (config_.stream_bytes == 0) return std::numeric_limits<std::uint64_t>::max();
  return std::uint64_t{first_data_seq()} + config_.stream_bytes;
}

Segment RenoSender::make_segment(SeqNum seq, std::uint32_t len, std::uint8_t extra_flags) const {
  Segment seg;
  seg.src_port = config_.src_port;
  seg.dst_port = config_.dst_port;
  seg.seq = seq;
  seg.flags = static_cast<std::uint8_t>(tcp_flag::kAck | extra_flags);
  seg.payload.resize(len);
  const std::uint64_t offset = seq - first_data_seq();
  for (std::uint32_t i = 0; i < len; ++i) seg.payload[i] = stream_byte(config_.seed, offset + i);
  return seg;
}

std::vector<Segment> RenoSender::start(SimTime now) {
  std::vector<Segment> out;
  if (state_ != State::closed) return out;
  if (config_.handshake) {
    state_ = State::syn_sent;
    Segment syn;
    syn.src_port = config_.src_port;
    syn.dst_port = config_.dst_port;
    syn.seq = config_.isn;
    syn.flags = tcp_flag::kSyn;
    snd_una_ = config_.isn;
    snd_nxt_ = snd_max_ = config_.isn + 1;
    syn_sent_at_ = now;
    ++stats_.segments_sent;
    arm(now);
    out.push_back(std::move(syn));
    return out;
  }
  state_ = State::established;
  snd_una_ = snd_nxt_ = snd_max_ = first_data_seq();
  fill_window(now, out);
  return out;
}

void RenoSender::record_sent(SeqNum seq, std::uint32_t len) {
  auto it = sent_.lower_bound(seq);
  while (it != sent_.end() && it->first < seq + len) it = sent_.erase(it);
  sent_.emplace(seq, len);
}

void RenoSender::fill_window(SimTime now, std::vector<Segment>& out) {
  if (state_ != State::established) return;
  const std::uint64_t end = stream_end();
  while (snd_nxt_ < end) {
    const bool fresh = snd_nxt_ >= snd_max_;
    std::uint32_t len = config_.mss;
    std::uint8_t flags = 0;
    if (fresh && config_.mss > 1 && rnd::bernoulli(rng_, config_.short_segment_prob)) {
      len = 1 + static_cast<std::uint32_t>(rnd::below(rng_, config_.mss - 1));
      flags = tcp_flag::kPsh;
    }
    len = static_cast<std::uint32_t>(std::min<std::uint64_t>(len, end - snd_nxt_));

    const std::uint32_t limit = std::min(cwnd_, peer_window_);
    // With nothing outstanding one segment always goes out, which doubles
    // as a zero-window probe.
    if (flight() > 0 && std::uint64_t{flight()} + len > limit) break;

    out.push_back(make_segment(snd_nxt_, len, flags));
    if (fresh && !timed_seq_) {
      timed_seq_ = snd_nxt_ + len;
      timed_at_ = now;
    }
    if (!fresh) ++stats_.retransmissions;
    ++stats_.segments_sent;
    record_sent(snd_nxt_, len);
    snd_nxt_ += len;
    snd_max_ = std::max(snd_max_, snd_nxt_);
    if (!rto_deadline_) arm(now);
  }
}

Segment RenoSender::retransmit_head() {
  const std::uint32_t outstanding = snd_max_ - snd_una_;
  std::uint32_t len = std::min(config_.mss, outstanding);
  auto it = sent_.upper_bound(snd_una_);
  if (it != sent_.begin()) {
    --it;
    const SeqNum orig_end = it->first + it->second;
    if (orig_end > snd_una_) len = orig_end - snd_una_;
  }
  if (rnd::bernoulli(rng_, config_.repacketize_prob)) len = std::min(config_.mss, outstanding);
  Segment seg = make_segment(snd_una_, len, 0);
  record_sent(snd_una_, len);
  ++stats_.retransmissions;
  ++stats_.segments_sent;
  timed_seq_.reset();
  return seg;
}

void RenoSender::sample_rtt(SimTime rtt) {
  if (!srtt_) {
    srtt_ = rtt;
    rttvar_ = rtt / 2;
  } else {
    const SimTime delta = *srtt_ > rtt ? *srtt_ - rtt : rtt - *srtt_;
    rttvar_ = (3 * rttvar_ + delta) / 4;
    srtt_ = (7 * *srtt_ + rtt) / 8;
  }
  rto_ = std::clamp(*srtt_ + std::max(kClockGranularity, 4 * rttvar_), config_.min_rto, config_.max_rto);
}

std::vector<Segment> RenoSender::on_ack(const Ack& ack, SimTime now) {
  std::vector<Segment> out;
  if (state_ == State::syn_sent) {
    if ((ack.flags & tcp_flag::kSyn) && ack.ack == config_.isn + 1) {
      peer_window_ = ack.window;
      state_ = State::established;
      snd_una_ = snd_nxt_ = snd_max_ = first_data_seq();
      if (!syn_retransmitted_) sample_rtt(now - syn_sent_at_);
      consecutive_timeouts_ = 0;
      rto_deadline_.reset();
      fill_window(now, out);
    }
    return out;
  }
  if (state_ != State::established) return out;

  if (ack.ack > snd_max_) {
    // Acknowledges bytes never sent.
    ++stats_.protocol_errors;
    return out;
  }
  peer_window_ = ack.window;

  if (ack.ack > snd_una_) {
    const std::uint32_t acked = ack.ack - snd_una_;
    if (timed_seq_ && ack.ack >= *timed_seq_) {
      sample_rtt(now - timed_at_);
      timed_seq_.reset();
    } else if (srtt_) {
      // Undo backoff once new data is acknowledged.
      rto_ = std::clamp(*srtt_ + std::max(kClockGranularity, 4 * rttvar_), config_.min_rto, config_.max_rto);
    }
    if (in_recovery_) {
      cwnd_ = ssthresh_;
      in_recovery_ = false;
    } else if (cwnd_ < ssthresh_) {
      cwnd_ += std::min(acked, config_.mss);
    } else {
      cwnd_ += std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::uint64_t{config_.mss} * config_.mss / cwnd_));
    }
    cwnd_ = std::min(cwnd_, kMaxCwnd);
    snd_una_ = ack.ack;
    if (snd_nxt_ < snd_una_) snd_nxt_ = snd_una_;
    dupacks_ = 0;
    consecutive_timeouts_ = 0;
    while (!sent_.empty() && sent_.begin()->first + sent_.begin()->second <= snd_una_) sent_.erase(sent_.begin());

    if (std::uint64_t{snd_una_} >= stream_end()) {
      state_ = State::finished;
      rto_deadline_.reset();
      return out;
    }
    if (flight() == 0) {
      rto_deadline_.reset();
    } else {
      arm(now);
    }
  } else if (ack.ack == snd_una_ && flight() > 0) {
    ++dupacks_;
    if (dupacks_ == 3 && !in_recovery_) {
      ssthresh_ = std::max(flight() / 2, 2 * config_.mss);
      out.push_back(retransmit_head());
      cwnd_ = ssthresh_ + 3 * config_.mss;
      in_recovery_ = true;
      ++stats_.fast_retransmits;
    } else if (in_recovery_) {
      cwnd_ = std::min(cwnd_ + config_.mss, kMaxCwnd);
    }
  }
  fill_window(now, out);
  return out;
}

std::vector<Segment> RenoSender::on_timeout(SimTime now) {
  std::vector<Segment> out;
  if (state_ == State::syn_sent) {
    ++stats_.timeouts;
    if (++consecutive_timeouts_ > config_.max_consecutive_timeouts) {
      state_ = State::aborted;
      rto_deadline_.reset();
      return out;
    }
    rto_ = std::min(2 * rto_, config_.max_rto);
    syn_retransmitted_ = true;
    Segment syn;
    syn.src_port = config_.src_port;
    syn.dst_port = config_.dst_port;
    syn.seq = config_.isn;
    syn.flags = tcp_flag::kSyn;
    ++stats_.segments_sent;
    ++stats_.retransmissions;
    arm(now);
    out.push_back(std::move(syn));
    return out;
  }
  if (state_ != State::established || snd_max_ == snd_una_) {
    rto_deadline_.reset();
    return out;
  }

  ++stats_.timeouts;
  if (++consecutive_timeouts_ > config_.max_consecutive_timeouts) {
    state_ = State::aborted;
    rto_deadline_.reset();
    return out;
  }
  const std::uint32_t outstanding = snd_max_ - snd_una_;
  ssthresh_ = std::max(std::max(flight(), outstanding) / 2, 2 * config_.mss);
  cwnd_ = config_.mss;
  rto_ = std::min(2 * rto_, config_.max_rto);
  in_recovery_ = false;
  dupacks_ = 0;

  // Go back N: everything after the head is sent again as the window reopens.
  snd_nxt_ = snd_una_;
  Segment seg = retransmit_head();
  snd_nxt_ = snd_una_ + static_cast<SeqNum>(seg.payload.size());
  arm(now);
  out.push_back(std::move(seg));
  return out;
}

// ---------------------------------------------------------------------------
// RenoReceiver

RenoReceiver::RenoReceiver(const RenoReceiverConfig& config) : config_(config), rcv_nxt_(config.initial_seq) {}

std::uint32_t RenoReceiver::window() const {
  return ooo_bytes_ >= config_.buffer_bytes ? 0 : config_.buffer_bytes - ooo_bytes_;
}

Ack RenoReceiver::make_ack(std::uint8_t flags) {
  pending_ = 0;
  delack_deadline_.reset();
  return Ack{rcv_nxt_, window(), flags};
}

void RenoReceiver::store(SeqNum seq, const std::uint8_t* data, std::uint32_t len) {
  const SeqNum end = seq + len;
  SeqNum cursor = std::max(seq, rcv_nxt_);
  auto it = ooo_.upper_bound(cursor);
  if (it != ooo_.begin()) {
    auto prev = std::prev(it);
    const SeqNum prev_end = prev->first + static_cast<SeqNum>(prev->second.size());
    cursor = std::max(cursor, prev_end);
  }
  while (cursor < end) {
    auto next = ooo_.lower_bound(cursor);
    const SeqNum piece_end = next == ooo_.end() ? end : std::min(end, next->first);
    if (piece_end > cursor) {
      ooo_.emplace(cursor, std::vector<std::uint8_t>(data + (cursor - seq), data + (piece_end - seq)));
      ooo_bytes_ += piece_end - cursor;
    }
    if (next == ooo_.end() || next->first >= end) break;
    cursor = next->first + static_cast<SeqNum>(next->second.size());
  }
}

ReceiverOutput RenoReceiver::on_segment(const Segment& seg, SimTime now) {
  ReceiverOutput out;
  if (seg.has(tcp_flag::kSyn)) {
    rcv_nxt_ = seg.seq + 1;
    ooo_.clear();
    ooo_bytes_ = 0;
    out.ack = make_ack(tcp_flag::kAck | tcp_flag::kSyn);
    return out;
  }
  if (seg.payload.empty()) return out;

  const SeqNum seg_end = seg.next();
  if (seg_end <= rcv_nxt_) {
    out.ack = make_ack();
    return out;
  }
  if (seg.seq > rcv_nxt_) {
    store(seg.seq, seg.payload.data(), static_cast<std::uint32_t>(seg.payload.size()));
    out.ack = make_ack();
    return out;
  }

  out.in_order.assign(seg.payload.begin() + (rcv_nxt_ - seg.seq), seg.payload.end());
  rcv_nxt_ = seg_end;
  const bool filled_gap = !ooo_.empty();
  while (!ooo_.empty() && ooo_.begin()->first <= rcv_nxt_) {
    auto node = ooo_.extract(ooo_.begin());
    const SeqNum start = node.key();
    const auto& bytes = node.mapped();
    const SeqNum end = start + static_cast<SeqNum>(bytes.size());
    if (end > rcv_nxt_) {
      out.in_order.insert(out.in_order.end(), bytes.begin() + (rcv_nxt_ - start), bytes.end());
      rcv_nxt_ = end;
    }
    ooo_bytes_ -= static_cast<std::uint32_t>(bytes.size());
  }

  if (!config_.delayed_ack || filled_gap) {
    out.ack = make_ack();
  } else if (++pending_ >= 2) {
    out.ack = make_ack();
  } else if (!delack_deadline_) {
    delack_deadline_ = now + config_.delayed_ack_timeout;
  }
  return out;
}

std::optional<Ack> RenoReceiver::on_delayed_ack_timer(SimTime now) {
  if (pending_ == 0 || !delack_deadline_ || now < *delack_deadline_) return std::nullopt;
  return make_ack();
}

std::vector<std::pair<SeqNum, SeqNum>> RenoReceiver::out_of_order() const {
  std::vector<std::pair<SeqNum, SeqNum>> out;
  for (const auto& [start, bytes] : ooo_) out.emplace_back(start, start + static_cast<SeqNum>(bytes.size()));
  return out;
}

}  // namespace tcpnc
