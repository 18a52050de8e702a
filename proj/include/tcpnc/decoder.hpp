#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tcpnc/segment.hpp"
#include "tcpnc/wire.hpp"

namespace tcpnc {

struct DecoderConfig {
  std::size_t buffer_cap = 100;     // stored rows, decoded or not
  std::uint32_t slot_bytes = 1460;  // bytes one buffer slot stands for in the window
  SeqNum initial_seq = 0;           // first data byte; replaced by SYN seq + 1
  std::uint32_t initial_recv_window = 65535;
};

struct DecoderStats {
  std::uint64_t frames = 0;
  std::uint64_t innovative = 0;
  std::uint64_t non_innovative = 0;
  std::uint64_t rejected = 0;
  std::uint64_t decoded = 0;
  std::uint64_t buffer_drops = 0;
  std::uint64_t dropped_obsolete = 0;
};

struct ReceiveResult {
  bool accepted = false;    // parsed and consistent with known columns
  bool innovative = false;  // increased the rank
  SeqNum ack = 0;           // first byte of the first unseen packet
  std::vector<Segment> delivered;
};

// Receiver side of the coding layer.
//
// Keeps the coefficient matrix in reduced row-echelon form with columns
// ordered by stream position. A packet is seen exactly when its column is a
// pivot, and decoded when its pivot row has no other nonzero entry. Not
// thread-safe; callers serialize.
class Decoder {
 public:
  explicit Decoder(const DecoderConfig& config = {});

  // Parses a coded frame (header + payload). Unparseable or inconsistent
  // frames are dropped and the current ACK is returned.
  ReceiveResult receive_coded(std::span<const std::uint8_t> frame);
  ReceiveResult receive(const wire::CodedPacket& pkt);

  // Learns the initial sequence number from a bypassed SYN.
  void on_control(const Segment& seg);

  SeqNum first_unseen() const { return ack_; }

  // ACKs from the co-located TCP receiver; consumed here, never forwarded.
  void handle_receiver_ack(SeqNum ack, std::uint32_t rwnd);

  // Window to advertise to the sender alongside first_unseen().
  std::uint32_t advertised_window() const;

  // Drops decoded packets that lie below Base and were ACKed by the receiver.
  std::size_t drop_obsolete();

  struct ColumnView {
    SeqNum start;
    SeqNum end;
    bool seen;
    bool decoded;
  };
  std::vector<ColumnView> columns() const;
  std::vector<std::pair<SeqNum, SeqNum>> seen_ranges() const;
  std::size_t rank() const { return rows_.size(); }
  std::size_t undecoded_rows() const;
  SeqNum base() const { return base_; }
  SeqNum delivered_ack() const { return delivered_ack_; }
  std::uint32_t recv_window() const { return recv_window_; }
  const DecoderStats& stats() const { return stats_; }

 private:
  struct Column {
    SeqNum start;
    SeqNum end;
    bool pivot = false;
    bool decoded = false;
    bool delivered = false;
  };
  struct Row {
    std::size_t pivot;  // column index
    std::vector<std::uint8_t> coeffs;
    std::vector<std::uint8_t> payload;
  };

  ReceiveResult finish(ReceiveResult r);
  void insert_column(std::size_t pos, SeqNum start, SeqNum end);
  void erase_column(std::size_t pos);
  void erase_row(std::size_t row);
  bool make_room(std::size_t arriving_pivot);
  void collect_decoded(std::vector<Segment>& out, std::uint16_t src_port, std::uint16_t dst_port);
  void update_ack();

  DecoderConfig config_;
  std::vector<Column> columns_;  // sorted by start
  std::vector<Row> rows_;
  SeqNum seen_floor_;
  SeqNum ack_;
  SeqNum base_ = 0;
  SeqNum delivered_ack_;
  std::uint32_t recv_window_;
  DecoderStats stats_;
};

}  // namespace tcpnc
