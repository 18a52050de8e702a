#include "tcpnc/netsim.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <optional>

#include "tcpnc/decoder.hpp"
#include "tcpnc/encoder.hpp"
#include "tcpnc/event_queue.hpp"
#include "tcpnc/random.hpp"
#include "tcpnc/wire.hpp"

namespace tcpnc {

std::string_view to_string(Mode mode) { return mode == Mode::tcp ? "tcp" : "tcpnc"; }

Mode parse_mode(std::string_view text) {
  if (text == "tcp") return Mode::tcp;
  if (text == "tcpnc") return Mode::tcpnc;
  throw ConfigError("mode must be tcp or tcpnc");
}

void SimConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(loss_rate) || loss_rate < 0.0 || loss_rate >= 1.0) throw ConfigError("loss rate must be in [0, 1)");
  if (!finite(reverse_loss_rate) || reverse_loss_rate < 0.0 || reverse_loss_rate >= 1.0) {
    throw ConfigError("reverse loss rate must be in [0, 1)");
  }
  if (!finite(link_rate) || link_rate <= 0.0) throw ConfigError("link rate must be positive");
  if (!finite(duration) || duration <= 0.0) throw ConfigError("duration must be positive");
  if (!finite(prop_delay) || prop_delay < 0.0) throw ConfigError("propagation delay must be non-negative");
  if (bottleneck_queue < 1) throw ConfigError("bottleneck queue must hold at least one packet");
  if (!finite(redundancy) || redundancy < 1.0) throw ConfigError("redundancy factor must be >= 1");
  if (window < 1 || window > 255) throw ConfigError("coding window must be in [1, 255]");
  if (mss < 1 || mss > 65535 - wire::kSubheaderBytes) throw ConfigError("mss out of range");
  if (encoder_cap < 1 || decoder_cap < 1) throw ConfigError("coding buffers must hold at least one packet");
  if (short_segment_prob < 0.0 || short_segment_prob > 1.0) throw ConfigError("short segment probability out of range");
  if (repacketize_prob < 0.0 || repacketize_prob > 1.0) throw ConfigError("repacketize probability out of range");
  if (!finite(coding_ns_per_symbol) || coding_ns_per_symbol < 0.0 || !finite(coding_ns_per_packet) ||
      coding_ns_per_packet < 0.0) {
    throw ConfigError("coding cost must be non-negative");
  }
}

namespace {

constexpr std::size_t kIpHeaderBytes = 20;
constexpr std::size_t kAckFrameBytes = kIpHeaderBytes + wire::kSegmentHeaderBytes;
constexpr std::size_t kReverseQueue = 1000;

SimTime from_seconds(double s) { return SimTime(std::llround(s * 1e9)); }

struct Frame {
  enum class Kind : std::uint8_t { segment = 1, coded = 2, control = 3, ack = 4 };
  Kind kind = Kind::segment;
  std::size_t wire_bytes = 0;
  Segment segment;
  std::vector<std::uint8_t> bytes;
  Ack ack;
};

// Loss element, drop-tail queue, serializer and propagation delay.
class Link {
 public:
  using Sink = std::function<void(Frame&&)>;

  Link(EventQueue& q, Digest& trace, double rate_bps, SimTime delay, std::size_t queue_cap, double loss,
       std::uint64_t seed, Sink sink)
      : q_(q),
        trace_(trace),
        rate_(static_cast<std::uint64_t>(std::llround(rate_bps))),
        delay_(delay),
        cap_(queue_cap),
        loss_(loss),
        rng_(seed),
        sink_(std::move(sink)) {}

  void send(Frame f) {
    ++injected_;
    if (rnd::bernoulli(rng_, loss_)) {
      ++lost_;
      note(1, f);
      return;
    }
    if (busy_ && queue_.size() >= cap_) {
      ++dropped_;
      note(2, f);
      return;
    }
    note(3, f);
    queue_.push_back(std::move(f));
    max_depth_ = std::max<std::uint64_t>(max_depth_, queue_.size());
    if (!busy_) start_tx();
  }

  std::uint64_t injected() const { return injected_; }
  std::uint64_t lost() const { return lost_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t max_depth() const { return max_depth_; }
  std::uint64_t in_flight() const { return queue_.size() + (busy_ ? 1 : 0) + propagating_; }

 private:
  void start_tx() {
    busy_ = true;
    auto frame = std::make_shared<Frame>(std::move(queue_.front()));
    queue_.pop_front();
    const auto bits = static_cast<std::uint64_t>(frame->wire_bytes) * 8;
    const SimTime tx{(bits * 1'000'000'000ull + rate_ / 2) / rate_};
    q_.schedule_in(tx, [this, frame] {
      busy_ = false;
      ++propagating_;
      q_.schedule_in(delay_, [this, frame] {
        --propagating_;
        ++delivered_;
        note(4, *frame);
        sink_(std::move(*frame));
      });
      if (!queue_.empty()) start_tx();
    });
  }

  void note(std::uint8_t what, const Frame& f) {
    trace_.update_u64(static_cast<std::uint64_t>(q_.now().count()));
    trace_.update(what);
    trace_.update(static_cast<std::uint8_t>(f.kind));
    trace_.update_u64(f.wire_bytes);
  }

  EventQueue& q_;
  Digest& trace_;
  std::uint64_t rate_;
  SimTime delay_;
  std::size_t cap_;
  double loss_;
  rnd::Engine rng_;
  Sink sink_;
  std::deque<Frame> queue_;
  bool busy_ = false;
  std::uint64_t injected_ = 0, lost_ = 0, dropped_ = 0, delivered_ = 0, propagating_ = 0, max_depth_ = 0;
};

RenoSenderConfig sender_config(const SimConfig& cfg) {
  RenoSenderConfig sc;
  sc.mss = cfg.mss;
  sc.initial_cwnd = 2 * cfg.mss;
  sc.initial_peer_window = cfg.receiver_buffer;
  sc.short_segment_prob = cfg.short_segment_prob;
  sc.repacketize_prob = cfg.repacketize_prob;
  sc.stream_bytes = cfg.stream_bytes;
  sc.max_consecutive_timeouts = cfg.max_consecutive_timeouts;
  sc.seed = cfg.seed;
  return sc;
}

class Session {
 public:
  explicit Session(const SimConfig& cfg)
      : cfg_(cfg),
        forward_(q_, trace_, cfg.link_rate, from_seconds(cfg.prop_delay), cfg.bottleneck_queue, cfg.loss_rate,
                 rnd::derive_seed(cfg.seed, 3), [this](Frame&& f) { at_receiver(std::move(f)); }),
        reverse_(q_, trace_, cfg.link_rate, from_seconds(cfg.prop_delay), kReverseQueue, cfg.reverse_loss_rate,
                 rnd::derive_seed(cfg.seed, 4), [this](Frame&& f) { at_sender(std::move(f)); }),
        sender_(sender_config(cfg)),
        receiver_(RenoReceiverConfig{cfg.mode == Mode::tcp && cfg.delayed_ack, std::chrono::milliseconds(200),
                                     cfg.receiver_buffer, 1}) {
    if (cfg.mode == Mode::tcpnc) {
      encoder_.emplace(EncoderConfig{cfg.redundancy, cfg.window, cfg.encoder_cap, rnd::derive_seed(cfg.seed, 2)});
      decoder_.emplace(DecoderConfig{cfg.decoder_cap, cfg.mss, 1, cfg.receiver_buffer});
    }
  }

  SessionMetrics run() {
    emit(sender_.start(q_.now()));
    rearm_rto();
    q_.run_until(from_seconds(cfg_.duration));
    return metrics();
  }

 private:
  // --- sender host -------------------------------------------------------

  void emit(std::vector<Segment> segs) {
    for (auto& seg : segs) {
      if (!encoder_) {
        Frame f{Frame::Kind::segment, kIpHeaderBytes + wire::kSegmentHeaderBytes + seg.payload.size(), std::move(seg),
                {}, {}};
        forward_.send(std::move(f));
        continue;
      }
      if (seg.is_control()) {
        Frame f{Frame::Kind::control, kIpHeaderBytes + wire::kSegmentHeaderBytes + seg.payload.size(),
                Encoder::bypass_control(seg).control, {}, {}};
        forward_.send(std::move(f));
        continue;
      }
      for (auto& pkt : encoder_->ingest_segment(seg)) {
        const auto ops = pkt.payload.size() * pkt.header.n();
        Frame f{Frame::Kind::coded, 0, {}, wire::encode_coded(pkt), {}};
        f.wire_bytes = kIpHeaderBytes + f.bytes.size();
        through_cpu(encoder_free_, ops, [this, f = std::move(f)]() mutable { forward_.send(std::move(f)); });
      }
    }
  }

  void at_sender(Frame&& f) {
    if (encoder_ && !(f.ack.flags & tcp_flag::kSyn)) encoder_->handle_ack(f.ack.ack);
    emit(sender_.on_ack(f.ack, q_.now()));
    rearm_rto();
  }

  void rearm_rto() {
    const auto deadline = sender_.rto_deadline();
    if (deadline == armed_rto_) return;
    armed_rto_ = deadline;
    const auto epoch = ++rto_epoch_;
    if (!deadline) return;
    q_.schedule(*deadline, [this, epoch] {
      if (epoch != rto_epoch_) return;
      armed_rto_.reset();
      emit(sender_.on_timeout(q_.now()));
      rearm_rto();
    });
  }

  // --- receiver host -----------------------------------------------------

  void at_receiver(Frame&& f) {
    switch (f.kind) {
      case Frame::Kind::segment: {
        auto out = receiver_.on_segment(f.segment, q_.now());
        app_deliver(out.in_order);
        if (out.ack) send_ack(*out.ack);
        rearm_delack();
        break;
      }
      case Frame::Kind::control: {
        decoder_->on_control(f.segment);
        // The handshake reply is control traffic and is not suppressed.
        auto out = receiver_.on_segment(f.segment, q_.now());
        if (out.ack) send_ack(*out.ack);
        break;
      }
      case Frame::Kind::coded: {
        std::size_t ops = 0;
        if (cfg_.coding_ns_per_symbol > 0.0) {
          try {
            const auto hdr = wire::decode_header(f.bytes);
            ops = (f.bytes.size() - hdr.payload_offset) * hdr.meta.n();
          } catch (const wire::WireError&) {
          }
        }
        through_cpu(decoder_free_, ops, [this, f = std::move(f)]() mutable { decode(f.bytes); });
        break;
      }
      case Frame::Kind::ack:
        break;
    }
  }

  void decode(const std::vector<std::uint8_t>& bytes) {
    auto res = decoder_->receive_coded(bytes);
    for (const auto& seg : res.delivered) {
      auto out = receiver_.on_segment(seg, q_.now());
      app_deliver(out.in_order);
      if (out.ack) decoder_->handle_receiver_ack(out.ack->ack, out.ack->window);
    }
    decoder_->drop_obsolete();
    send_ack(Ack{decoder_->first_unseen(), decoder_->advertised_window(), tcp_flag::kAck});
  }

  void send_ack(const Ack& ack) {
    Frame f{Frame::Kind::ack, kAckFrameBytes, {}, {}, ack};
    reverse_.send(std::move(f));
  }

  void rearm_delack() {
    const auto deadline = receiver_.delayed_ack_deadline();
    if (deadline == armed_delack_) return;
    armed_delack_ = deadline;
    const auto epoch = ++delack_epoch_;
    if (!deadline) return;
    q_.schedule(*deadline, [this, epoch] {
      if (epoch != delack_epoch_) return;
      armed_delack_.reset();
      if (auto ack = receiver_.on_delayed_ack_timer(q_.now())) send_ack(*ack);
      rearm_delack();
    });
  }

  void app_deliver(const std::vector<std::uint8_t>& bytes) {
    for (auto b : bytes) {
      if (b != stream_byte(cfg_.seed, delivered_)) intact_ = false;
      digest_.update(b);
      ++delivered_;
    }
    if (cfg_.stream_bytes != 0 && delivered_ >= cfg_.stream_bytes && !finished_) {
      finished_ = true;
      finished_at_ = q_.now();
      q_.stop();
    }
  }

  // Serial processing stage: work is released in order once the CPU is free.
  template <typename F>
  void through_cpu(SimTime& free_at, std::size_t symbol_ops, F&& work) {
    if (!has_coding_cost()) {
      work();
      return;
    }
    const SimTime cost{
        std::llround(cfg_.coding_ns_per_packet + cfg_.coding_ns_per_symbol * static_cast<double>(symbol_ops))};
    free_at = std::max(free_at, q_.now()) + cost;
    q_.schedule(free_at, std::forward<F>(work));
  }

  bool has_coding_cost() const { return cfg_.coding_ns_per_packet > 0.0 || cfg_.coding_ns_per_symbol > 0.0; }

  SessionMetrics metrics() const {
    SessionMetrics m;
    m.delivered_bytes = delivered_;
    m.goodput_bps = static_cast<double>(delivered_) * 8.0 / cfg_.duration;
    m.coded_sent = encoder_ ? encoder_->stats().coded_sent : 0;
    m.forward_frames = forward_.injected();
    m.losses_injected = forward_.lost();
    m.queue_drops = forward_.dropped();
    m.frames_delivered = forward_.delivered();
    m.frames_in_flight = forward_.in_flight();
    m.max_queue_depth = forward_.max_depth();
    m.reverse_frames = reverse_.injected();
    m.reverse_losses = reverse_.lost();
    const auto& st = sender_.stats();
    m.timeouts = st.timeouts;
    m.fast_retransmits = st.fast_retransmits;
    m.visible_losses = st.timeouts + st.fast_retransmits;
    if (decoder_) {
      m.innovative = decoder_->stats().innovative;
      m.non_innovative = decoder_->stats().non_innovative;
    }
    const auto state = sender_.state();
    if (cfg_.stream_bytes != 0) {
      m.completed = finished_;
    } else {
      m.completed = state == RenoSender::State::established || state == RenoSender::State::finished;
    }
    m.stream_intact = intact_;
    m.delivered_digest = digest_.value();
    m.trace_digest = trace_.value();
    return m;
  }

  const SimConfig cfg_;
  EventQueue q_;
  Digest trace_;
  Link forward_;
  Link reverse_;
  RenoSender sender_;
  RenoReceiver receiver_;
  std::optional<Encoder> encoder_;
  std::optional<Decoder> decoder_;

  std::optional<SimTime> armed_rto_;
  std::uint64_t rto_epoch_ = 0;
  std::optional<SimTime> armed_delack_;
  std::uint64_t delack_epoch_ = 0;
  SimTime encoder_free_{0};
  SimTime decoder_free_{0};

  std::uint64_t delivered_ = 0;
  Digest digest_;
  bool intact_ = true;
  bool finished_ = false;
  SimTime finished_at_{0};
};

}  // namespace

SessionMetrics run_session(const SimConfig& cfg) {
  cfg.validate();
  Session session(cfg);
  return session.run();
}

}  // namespace tcpnc
