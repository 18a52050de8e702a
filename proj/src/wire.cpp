#include "tcpnc/wire.hpp"

#include <string>

namespace tcpnc::wire {
namespace {

constexpr std::uint32_t kMax16 = 0xFFFF;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw WireError("truncated buffer at offset " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t header_overhead(std::size_t n) {
  if (n == 0) throw std::invalid_argument("header_overhead: n must be at least 1");
  return 5 * n + 7;
}

std::size_t encoded_header_size(std::size_t n) { return kPortBytes + header_overhead(n); }

void validate(const CodingHeaderMeta& meta) {
  if (meta.entries.empty()) throw WireError("coding header needs at least one entry");
  if (meta.entries.size() > kMaxEntries) throw WireError("coding header has more than 255 entries");
  for (std::size_t i = 0; i < meta.entries.size(); ++i) {
    const auto& e = meta.entries[i];
    if (e.end < e.start) throw WireError("entry end precedes start");
    if (e.end - e.start > kMax16) throw WireError("entry range exceeds 16-bit length field");
    if (i > 0) {
      const auto& prev = meta.entries[i - 1];
      if (e.start <= prev.end) throw WireError("entries must be ordered and disjoint");
      if (e.start - prev.end > kMax16) throw WireError("gap to previous entry exceeds 16 bits");
    }
  }
}

std::vector<std::uint8_t> encode_header(const CodingHeaderMeta& meta) {
  validate(meta);
  std::vector<std::uint8_t> out;
  out.reserve(encoded_header_size(meta.n()));
  Writer w(out);
  w.u16(meta.src_port);
  w.u16(meta.dst_port);
  w.u32(meta.base);
  w.u8(static_cast<std::uint8_t>(meta.n()));
  for (std::size_t i = 0; i < meta.entries.size(); ++i) {
    const auto& e = meta.entries[i];
    if (i == 0) {
      w.u32(e.start);
    } else {
      w.u16(static_cast<std::uint16_t>(e.start - meta.entries[i - 1].end));
    }
    w.u16(static_cast<std::uint16_t>(e.end - e.start));
    w.u8(e.coeff);
  }
  return out;
}

DecodedHeader decode_header(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  DecodedHeader out;
  auto& meta = out.meta;
  meta.src_port = r.u16();
  meta.dst_port = r.u16();
  meta.base = r.u32();
  const std::size_t n = r.u8();
  if (n == 0) throw WireError("coding header declares n = 0");
  if (bytes.size() < encoded_header_size(n)) throw WireError("buffer shorter than declared header");
  meta.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CodingEntry e;
    if (i == 0) {
      e.start = r.u32();
    } else {
      const std::uint64_t start = std::uint64_t{meta.entries.back().end} + r.u16();
      if (start == meta.entries.back().end) throw WireError("overlapping entries");
      if (start > 0xFFFFFFFFu) throw WireError("sequence overflow");
      e.start = static_cast<SeqNum>(start);
    }
    const std::uint64_t end = std::uint64_t{e.start} + r.u16();
    if (end > 0xFFFFFFFFu) throw WireError("sequence overflow");
    e.end = static_cast<SeqNum>(end);
    e.coeff = r.u8();
    meta.entries.push_back(e);
  }
  out.payload_offset = r.pos();
  return out;
}

std::vector<std::uint8_t> encode_coded(const CodedPacket& pkt) {
  auto out = encode_header(pkt.header);
  out.insert(out.end(), pkt.payload.begin(), pkt.payload.end());
  return out;
}

CodedPacket decode_coded(std::span<const std::uint8_t> bytes) {
  auto hdr = decode_header(bytes);
  CodedPacket pkt;
  pkt.header = std::move(hdr.meta);
  pkt.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(hdr.payload_offset), bytes.end());
  return pkt;
}

void encode_subheader(const Segment& seg, std::span<std::uint8_t, kSubheaderBytes> out) {
  std::vector<std::uint8_t> buf;
  buf.reserve(kSubheaderBytes);
  Writer w(buf);
  w.u32(seg.seq);
  w.u32(seg.ack);
  w.u8(0x50);  // data offset 5 words, no options
  w.u8(seg.flags);
  w.u16(seg.window);
  w.u16(0);  // checksum is not carried at this layer
  w.u16(0);  // urgent pointer
  std::copy(buf.begin(), buf.end(), out.begin());
}

Segment decode_subheader(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Segment seg;
  seg.seq = r.u32();
  seg.ack = r.u32();
  r.u8();
  seg.flags = r.u8();
  seg.window = r.u16();
  r.u16();
  r.u16();
  return seg;
}

std::vector<std::uint8_t> encode_segment(const Segment& seg) {
  std::vector<std::uint8_t> out;
  out.reserve(kSegmentHeaderBytes + seg.payload.size());
  Writer w(out);
  w.u16(seg.src_port);
  w.u16(seg.dst_port);
  out.resize(kSegmentHeaderBytes);
  encode_subheader(seg, std::span<std::uint8_t, kSubheaderBytes>(out.data() + kPortBytes, kSubheaderBytes));
  out.insert(out.end(), seg.payload.begin(), seg.payload.end());
  return out;
}

Segment decode_segment(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSegmentHeaderBytes) throw WireError("truncated segment");
  Reader r(bytes);
  const auto src = r.u16();
  const auto dst = r.u16();
  Segment seg = decode_subheader(bytes.subspan(kPortBytes));
  seg.src_port = src;
  seg.dst_port = dst;
  seg.payload.assign(bytes.begin() + kSegmentHeaderBytes, bytes.end());
  return seg;
}

}  // namespace tcpnc::wire
