#include "tcpnc/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tcpnc/gf256.hpp"

namespace tcpnc {

Encoder::Encoder(const EncoderConfig& config)
    : config_(config),
      redundancy_units_(std::llround(config.redundancy * kCreditUnit)),
      rng_(config.seed) {
  if (!(config.redundancy >= 1.0) || !std::isfinite(config.redundancy)) {
    throw std::invalid_argument("encoder: redundancy must be >= 1");
  }
  if (config.window < 1 || config.window > wire::kMaxEntries) {
    throw std::invalid_argument("encoder: window must be in [1, 255]");
  }
  if (config.buffer_cap < 1) throw std::invalid_argument("encoder: buffer_cap must be >= 1");
}

std::vector<wire::CodedPacket> Encoder::ingest_segment(const Segment& seg) {
  if (seg.is_control()) {
    throw std::invalid_argument("encoder: SYN/RST segments must use bypass_control");
  }
  if (seg.payload.empty()) return {};

  ++stats_.arrivals;
  src_port_ = seg.src_port;
  dst_port_ = seg.dst_port;
  if (!base_known_) {
    base_ = seg.seq;
    base_known_ = true;
  }

  // Subtract the already-buffered ranges from [seg.seq, seg.last()].
  const SeqNum first = seg.seq;
  const SeqNum last = seg.last();
  std::vector<std::pair<SeqNum, SeqNum>> runs;
  SeqNum cursor = first;
  bool exhausted = false;
  for (const auto& p : buffer_) {
    if (p.end < cursor) continue;
    if (p.start > last) break;
    if (p.start > cursor) runs.emplace_back(cursor, p.start - 1);
    if (p.end >= last) {
      exhausted = true;
      break;
    }
    cursor = p.end + 1;
  }
  if (!exhausted && cursor <= last) runs.emplace_back(cursor, last);

  std::optional<SeqNum> arrived;
  for (const auto& [start, end] : runs) {
    BufferedPacket pkt;
    pkt.start = start;
    pkt.end = end;
    pkt.index = next_index_++;
    pkt.data.resize(pkt.real_size());
    Segment sub = seg;
    sub.seq = start;
    wire::encode_subheader(sub, std::span<std::uint8_t, wire::kSubheaderBytes>(pkt.data.data(), wire::kSubheaderBytes));
    const auto offset = static_cast<std::ptrdiff_t>(start - seg.seq);
    std::copy(seg.payload.begin() + offset, seg.payload.begin() + offset + (end - start + 1),
              pkt.data.begin() + wire::kSubheaderBytes);
    ++stats_.packets_created;
    if (insert(std::move(pkt))) arrived = start;
  }

  if (!arrived) {
    // A pure retransmission: the arrival is the oldest buffered packet it covers.
    for (const auto& p : buffer_) {
      if (p.end >= first && p.start <= last) {
        arrived = p.start;
        break;
      }
    }
  }
  if (arrived) anchor_ = arrived;

  std::vector<wire::CodedPacket> out;
  credit_ += redundancy_units_;
  while (credit_ >= kCreditUnit) {
    credit_ -= kCreditUnit;
    if (auto pkt = generate_coded()) out.push_back(std::move(*pkt));
  }
  return out;
}

bool Encoder::insert(BufferedPacket pkt) {
  if (buffer_.size() >= config_.buffer_cap) {
    // Full: whichever packet holds the newest bytes is dropped.
    ++stats_.buffer_drops;
    if (pkt.start > buffer_.back().start) return false;
    buffer_.pop_back();
  }
  auto pos = std::lower_bound(buffer_.begin(), buffer_.end(), pkt.start,
                              [](const BufferedPacket& p, SeqNum s) { return p.start < s; });
  buffer_.insert(pos, std::move(pkt));
  repad();
  return true;
}

void Encoder::repad() {
  std::size_t longest = 0;
  for (const auto& p : buffer_) longest = std::max(longest, p.real_size());
  if (longest == padded_size_) {
    // Only packets that are not yet padded need touching.
    for (auto& p : buffer_) {
      if (p.data.size() != longest) p.data.resize(longest, 0);
    }
    return;
  }
  padded_size_ = longest;
  for (auto& p : buffer_) p.data.resize(longest, 0);
}

std::vector<std::size_t> Encoder::coding_window() const {
  std::vector<std::size_t> window;
  if (buffer_.empty()) return window;

  std::size_t pos = buffer_.size() - 1;
  if (anchor_) {
    auto it = std::lower_bound(buffer_.begin(), buffer_.end(), *anchor_,
                               [](const BufferedPacket& p, SeqNum s) { return p.start < s; });
    if (it != buffer_.end()) pos = static_cast<std::size_t>(it - buffer_.begin());
  }
  const std::size_t w = config_.window;
  std::size_t lo = pos >= w - 1 ? pos - (w - 1) : 0;
  std::size_t hi = pos;
  // Predecessors already freed: extend past the arrival.
  while (hi - lo + 1 < w && hi + 1 < buffer_.size()) ++hi;
  for (std::size_t i = lo; i <= hi; ++i) window.push_back(i);
  return window;
}

std::optional<wire::CodedPacket> Encoder::generate_coded() {
  const auto window = coding_window();
  if (window.empty()) return std::nullopt;

  std::size_t length = 0;
  for (auto i : window) length = std::max(length, buffer_[i].real_size());

  wire::CodedPacket pkt;
  pkt.header.src_port = src_port_;
  pkt.header.dst_port = dst_port_;
  pkt.header.base = base_;
  pkt.payload.assign(length, 0);
  for (auto i : window) {
    const auto& p = buffer_[i];
    const auto coeff = static_cast<gf256::Element>(1 + rnd::below(rng_, 255));
    gf256::axpy(pkt.payload, std::span<const std::uint8_t>(p.data.data(), length), coeff);
    pkt.header.entries.push_back({p.start, p.end, coeff});
  }
  ++stats_.coded_sent;
  return pkt;
}

std::size_t Encoder::handle_ack(SeqNum ack) {
  if (!base_known_ || ack > base_) {
    base_ = ack;
    base_known_ = true;
  }
  std::size_t freed = 0;
  while (!buffer_.empty() && buffer_.front().end < ack) {
    buffer_.pop_front();
    ++freed;
  }
  if (freed > 0) {
    stats_.packets_freed += freed;
    repad();
  }
  return freed;
}

wire::CodedPacket Encoder::bypass_control(const Segment& seg) {
  if (!seg.is_control()) {
    throw std::invalid_argument("encoder: only SYN/RST segments bypass the coding buffer");
  }
  wire::CodedPacket pkt;
  pkt.control_bypass = true;
  pkt.control = seg;
  return pkt;
}

}  // namespace tcpnc
