#include "tcpnc/decoder.hpp"

#include <algorithm>

#include "tcpnc/gf256.hpp"

namespace tcpnc {
namespace {

void extend_to(std::vector<std::uint8_t>& v, std::size_t n) {
  if (v.size() < n) v.resize(n, 0);
}

// dst += coeff * src, zero-extending whichever is shorter.
void axpy_extend(std::vector<std::uint8_t>& dst, std::vector<std::uint8_t>& src, std::uint8_t coeff) {
  const auto n = std::max(dst.size(), src.size());
  extend_to(dst, n);
  extend_to(src, n);
  gf256::axpy(dst, src, coeff);
}

void scale(std::vector<std::uint8_t>& v, std::uint8_t s) {
  std::vector<std::uint8_t> out(v.size(), 0);
  gf256::axpy(out, v, s);
  v.swap(out);
}

}  // namespace

Decoder::Decoder(const DecoderConfig& config)
    : config_(config),
      seen_floor_(config.initial_seq),
      ack_(config.initial_seq),
      delivered_ack_(config.initial_seq),
      recv_window_(config.initial_recv_window) {}

ReceiveResult Decoder::receive_coded(std::span<const std::uint8_t> frame) {
  wire::CodedPacket pkt;
  try {
    pkt = wire::decode_coded(frame);
  } catch (const wire::WireError&) {
    ++stats_.frames;
    ++stats_.rejected;
    return finish({});
  }
  return receive(pkt);
}

void Decoder::on_control(const Segment& seg) {
  if (seg.has(tcp_flag::kSyn) && columns_.empty() && rows_.empty()) {
    const SeqNum first = seg.seq + 1;
    seen_floor_ = ack_ = delivered_ack_ = first;
  }
}

ReceiveResult Decoder::receive(const wire::CodedPacket& pkt) {
  ++stats_.frames;
  ReceiveResult result;
  if (pkt.control_bypass) {
    on_control(pkt.control);
    result.accepted = true;
    result.delivered.push_back(pkt.control);
    return finish(std::move(result));
  }

  const auto& hdr = pkt.header;
  try {
    wire::validate(hdr);
  } catch (const wire::WireError&) {
    ++stats_.rejected;
    return finish(std::move(result));
  }

  // Every entry must either match a known column exactly or be new and
  // disjoint from all known columns. Anything else is inconsistent.
  auto by_start = [](const Column& c, SeqNum s) { return c.start < s; };
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < hdr.entries.size(); ++i) {
    const auto& e = hdr.entries[i];
    auto it = std::lower_bound(columns_.begin(), columns_.end(), e.start, by_start);
    if (it != columns_.end() && it->start == e.start && it->end == e.end) continue;
    const bool overlaps_next = it != columns_.end() && it->start <= e.end;
    const bool overlaps_prev = it != columns_.begin() && std::prev(it)->end >= e.start;
    if (overlaps_next || overlaps_prev || e.start < seen_floor_) {
      ++stats_.rejected;
      return finish(std::move(result));
    }
    fresh.push_back(i);
  }

  if (hdr.base > base_) base_ = hdr.base;
  result.accepted = true;

  for (auto i : fresh) {
    const auto& e = hdr.entries[i];
    auto it = std::lower_bound(columns_.begin(), columns_.end(), e.start, by_start);
    insert_column(static_cast<std::size_t>(it - columns_.begin()), e.start, e.end);
  }

  auto build_vector = [&] {
    std::vector<std::uint8_t> v(columns_.size(), 0);
    for (const auto& e : hdr.entries) {
      auto it = std::lower_bound(columns_.begin(), columns_.end(), e.start, by_start);
      v[static_cast<std::size_t>(it - columns_.begin())] = e.coeff;
    }
    return v;
  };

  // Innovation test on coefficients only; the payload is touched afterwards.
  std::vector<std::uint8_t> v;
  std::vector<std::pair<std::size_t, std::uint8_t>> ops;
  auto reduce = [&] {
    v = build_vector();
    ops.clear();
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const auto m = v[rows_[r].pivot];
      if (m == 0) continue;
      gf256::axpy(v, rows_[r].coeffs, m);
      ops.emplace_back(r, m);
    }
    return static_cast<std::size_t>(std::find_if(v.begin(), v.end(), [](auto c) { return c != 0; }) - v.begin());
  };

  std::size_t lead = reduce();
  if (lead == v.size()) {
    ++stats_.non_innovative;
    return finish(std::move(result));
  }

  if (rows_.size() >= config_.buffer_cap) {
    drop_obsolete();
    if (rows_.size() >= config_.buffer_cap) {
      if (!make_room(lead)) {
        ++stats_.buffer_drops;
        return finish(std::move(result));
      }
    }
    lead = reduce();
  }

  std::vector<std::uint8_t> payload = pkt.payload;
  for (auto [r, m] : ops) axpy_extend(payload, rows_[r].payload, m);

  const auto s = gf256::inv(v[lead]);
  scale(v, s);
  scale(payload, s);

  for (auto& row : rows_) {
    const auto c = row.coeffs[lead];
    if (c == 0) continue;
    gf256::axpy(row.coeffs, v, c);
    axpy_extend(row.payload, payload, c);
  }
  rows_.push_back(Row{lead, std::move(v), std::move(payload)});
  columns_[lead].pivot = true;
  ++stats_.innovative;
  result.innovative = true;

  collect_decoded(result.delivered, hdr.src_port, hdr.dst_port);
  return finish(std::move(result));
}

// Buffer full with an innovative arrival: the row touching the newest bytes
// goes. Rows whose pivot precedes the first unseen byte are never evicted,
// because the sender has already been told they are seen.
bool Decoder::make_room(std::size_t arriving_pivot) {
  std::size_t victim = rows_.size();
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& col = columns_[rows_[r].pivot];
    if (col.start < ack_) continue;
    if (victim == rows_.size() || rows_[r].pivot > rows_[victim].pivot) victim = r;
  }
  if (victim == rows_.size() || rows_[victim].pivot < arriving_pivot) return false;
  ++stats_.buffer_drops;
  auto& col = columns_[rows_[victim].pivot];
  col.decoded = false;  // delivered stays set, so the bytes are not handed up twice
  erase_row(victim);
  return true;
}

void Decoder::collect_decoded(std::vector<Segment>& out, std::uint16_t src_port, std::uint16_t dst_port) {
  for (const auto& row : rows_) {
    auto& col = columns_[row.pivot];
    if (col.decoded) continue;
    bool unit = true;
    for (std::size_t c = 0; c < row.coeffs.size() && unit; ++c) {
      if (c != row.pivot && row.coeffs[c] != 0) unit = false;
    }
    if (!unit) continue;
    col.decoded = true;
    ++stats_.decoded;
    if (col.delivered) continue;
    col.delivered = true;

    const std::size_t len = col.end - col.start + 1;
    std::vector<std::uint8_t> data = row.payload;
    extend_to(data, wire::kSubheaderBytes + len);
    Segment seg = wire::decode_subheader(data);
    seg.src_port = src_port;
    seg.dst_port = dst_port;
    seg.seq = col.start;
    // Trailing encoder padding is cut off here.
    seg.payload.assign(data.begin() + wire::kSubheaderBytes,
                       data.begin() + static_cast<std::ptrdiff_t>(wire::kSubheaderBytes + len));
    out.push_back(std::move(seg));
  }
  std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) { return a.seq < b.seq; });
}

void Decoder::handle_receiver_ack(SeqNum ack, std::uint32_t rwnd) {
  if (ack > delivered_ack_) delivered_ack_ = ack;
  recv_window_ = rwnd;
}

std::uint32_t Decoder::advertised_window() const {
  const std::uint64_t tcp_last = std::uint64_t{delivered_ack_} + recv_window_;
  // Rows the receiver has already acknowledged only wait for Base and count as free.
  const auto used = static_cast<std::size_t>(std::count_if(rows_.begin(), rows_.end(), [&](const Row& r) {
    const auto& col = columns_[r.pivot];
    return !(col.decoded && col.delivered && col.end < delivered_ack_);
  }));
  const std::size_t free_slots = used >= config_.buffer_cap ? 0 : config_.buffer_cap - used;
  const std::uint64_t buffer_last = std::uint64_t{ack_} + std::uint64_t{free_slots} * config_.slot_bytes;
  const std::uint64_t last = std::min(tcp_last, buffer_last);
  if (last <= ack_) return 0;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(last - ack_, 0xFFFFFFFFu));
}

std::size_t Decoder::drop_obsolete() {
  std::size_t dropped = 0;
  for (std::size_t i = columns_.size(); i-- > 0;) {
    const auto& col = columns_[i];
    if (!col.decoded || !col.delivered) continue;
    if (col.end >= base_ || col.end >= delivered_ack_) continue;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (rows_[r].pivot == i) {
        erase_row(r);
        break;
      }
    }
    erase_column(i);
    ++dropped;
  }
  stats_.dropped_obsolete += dropped;
  return dropped;
}

ReceiveResult Decoder::finish(ReceiveResult r) {
  drop_obsolete();
  update_ack();
  r.ack = ack_;
  return r;
}

void Decoder::update_ack() {
  SeqNum cur = seen_floor_;
  for (const auto& col : columns_) {
    if (col.end < cur) continue;
    if (col.start != cur || !col.pivot) break;
    cur = col.end + 1;
  }
  seen_floor_ = cur;
  ack_ = cur;
}

void Decoder::insert_column(std::size_t pos, SeqNum start, SeqNum end) {
  columns_.insert(columns_.begin() + static_cast<std::ptrdiff_t>(pos), Column{start, end});
  for (auto& row : rows_) {
    row.coeffs.insert(row.coeffs.begin() + static_cast<std::ptrdiff_t>(pos), 0);
    if (row.pivot >= pos) ++row.pivot;
  }
}

void Decoder::erase_column(std::size_t pos) {
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(pos));
  for (auto& row : rows_) {
    row.coeffs.erase(row.coeffs.begin() + static_cast<std::ptrdiff_t>(pos));
    if (row.pivot > pos) --row.pivot;
  }
}

void Decoder::erase_row(std::size_t r) {
  columns_[rows_[r].pivot].pivot = false;
  rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
}

std::size_t Decoder::undecoded_rows() const {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [&](const Row& r) { return !columns_[r.pivot].decoded; }));
}

std::vector<Decoder::ColumnView> Decoder::columns() const {
  std::vector<ColumnView> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back({c.start, c.end, c.pivot, c.decoded});
  return out;
}

std::vector<std::pair<SeqNum, SeqNum>> Decoder::seen_ranges() const {
  std::vector<std::pair<SeqNum, SeqNum>> out;
  for (const auto& c : columns_) {
    if (c.pivot) out.emplace_back(c.start, c.end);
  }
  return out;
}

}  // namespace tcpnc
