#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracle.hpp"
#include "tcpnc/encoder.hpp"

using namespace tcpnc;

namespace {

Segment data_segment(SeqNum first, SeqNum last, std::uint8_t fill = 0) {
  Segment s;
  s.src_port = 5001;
  s.dst_port = 5201;
  s.seq = first;
  s.flags = tcp_flag::kAck;
  s.payload.resize(last - first + 1);
  for (std::size_t i = 0; i < s.payload.size(); ++i) s.payload[i] = static_cast<std::uint8_t>(fill + first + i);
  return s;
}

EncoderConfig config(double r, unsigned w, std::size_t cap = 100) { return EncoderConfig{r, w, cap, 42}; }

// Real bytes of a buffered packet as the oracle sees them: subheader + payload, zero padded.
std::vector<std::uint8_t> padded(const BufferedPacket& p, std::size_t length) {
  std::vector<std::uint8_t> out(p.data.begin(), p.data.begin() + static_cast<std::ptrdiff_t>(p.real_size()));
  out.resize(length, 0);
  return out;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("fresh segment with R = 1 yields one buffered packet and one combination") {
    Encoder enc(config(1.0, 1));
    const auto out = enc.ingest_segment(data_segment(0, 999));
    REQUIRE(enc.buffer().size() == 1);
    CHECK(enc.buffer()[0].start == 0);
    CHECK(enc.buffer()[0].end == 999);
    REQUIRE(out.size() == 1);
    CHECK(out[0].header.n() == 1);
    CHECK(out[0].header.entries[0].start == 0);
    CHECK(out[0].header.entries[0].end == 999);
    CHECK(out[0].header.entries[0].coeff != 0);
  }

  TEST_CASE("retransmission of buffered bytes with R = 2 emits two combinations and buffers nothing") {
    Encoder enc(config(2.0, 1));
    CHECK(enc.ingest_segment(data_segment(0, 999)).size() == 2);
    const auto out = enc.ingest_segment(data_segment(0, 999));
    CHECK(enc.buffer().size() == 1);
    CHECK(out.size() == 2);
    CHECK(enc.stats().packets_created == 1);
  }

  TEST_CASE("repacketized segment keeps only the new bytes") {
    Encoder enc(config(1.0, 1));
    enc.ingest_segment(data_segment(0, 999));
    enc.ingest_segment(data_segment(500, 1999));
    REQUIRE(enc.buffer().size() == 2);
    CHECK(enc.buffer()[1].start == 1000);
    CHECK(enc.buffer()[1].end == 1999);
  }

  TEST_CASE("repacketized bytes keep their original content") {
    Encoder enc(config(1.0, 1));
    enc.ingest_segment(data_segment(0, 999));
    enc.ingest_segment(data_segment(500, 1999));
    const auto& p = enc.buffer()[1];
    CHECK(p.data[wire::kSubheaderBytes] == static_cast<std::uint8_t>(1000));
    CHECK(p.data[wire::kSubheaderBytes + 999] == static_cast<std::uint8_t>(1999));
  }

  TEST_CASE("coding window takes the newest arrival and its W - 1 predecessors") {
    Encoder enc(config(1.0, 3));
    for (SeqNum k = 0; k < 5; ++k) enc.ingest_segment(data_segment(k * 100, k * 100 + 99));
    CHECK(enc.coding_window() == std::vector<std::size_t>{2, 3, 4});
    const auto pkt = enc.generate_coded();
    REQUIRE(pkt);
    REQUIRE(pkt->header.n() == 3);
    CHECK(pkt->header.entries[0].start == 200);
    CHECK(pkt->header.entries[2].start == 400);
  }

  TEST_CASE("window extends past the arrival when predecessors are gone") {
    Encoder enc(config(1.0, 3));
    for (SeqNum k = 0; k < 5; ++k) enc.ingest_segment(data_segment(k * 100, k * 100 + 99));
    enc.handle_ack(300);
    // Retransmission of [300, 399]: its predecessors were freed.
    enc.ingest_segment(data_segment(300, 399));
    CHECK(enc.coding_window() == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("W = 1 is a repetition code") {
    Encoder enc(config(1.0, 1));
    enc.ingest_segment(data_segment(0, 99));
    const auto pkt = enc.generate_coded();
    REQUIRE(pkt);
    const auto& p = enc.buffer()[0];
    const auto a = pkt->header.entries[0].coeff;
    for (std::size_t i = 0; i < pkt->payload.size(); ++i) REQUIRE(pkt->payload[i] == oracle::mul(a, p.data[i]));
  }

  TEST_CASE("W = 2 combinations are consistent equations that an oracle solver inverts") {
    Encoder enc(config(1.0, 2));
    enc.ingest_segment(data_segment(0, 299, 5));
    enc.ingest_segment(data_segment(300, 799, 9));  // longer: forces re-padding
    const auto length = enc.buffer()[1].real_size();
    const auto d1 = padded(enc.buffer()[0], length);
    const auto d2 = padded(enc.buffer()[1], length);

    oracle::Matrix m;
    std::vector<std::vector<std::uint8_t>> payloads;
    while (m.size() < 2) {
      const auto pkt = enc.generate_coded();
      REQUIRE(pkt);
      REQUIRE(pkt->header.n() == 2);
      const auto a = pkt->header.entries[0].coeff;
      const auto b = pkt->header.entries[1].coeff;
      REQUIRE(pkt->payload.size() == length);
      for (std::size_t i = 0; i < length; ++i) REQUIRE(pkt->payload[i] == (oracle::mul(a, d1[i]) ^ oracle::mul(b, d2[i])));
      m.push_back({a, b});
      payloads.push_back(pkt->payload);
      if (oracle::rank(m) < m.size()) {
        m.pop_back();
        payloads.pop_back();
      }
    }
    const auto red = oracle::rref(m, &payloads);
    REQUIRE(red.pivots.size() == 2);
    CHECK(payloads[0] == d1);
    CHECK(payloads[1] == d2);
  }

  TEST_CASE("ack frees packets strictly below the acknowledged byte") {
    auto filled = [] {
      Encoder enc(config(1.0, 1));
      enc.ingest_segment(data_segment(0, 999));
      enc.ingest_segment(data_segment(1000, 1999));
      return enc;
    };
    auto a = filled();
    CHECK(a.handle_ack(1000) == 1);
    CHECK(a.base() == 1000);
    auto b = filled();
    CHECK(b.handle_ack(999) == 0);
    Encoder c(config(1.0, 1));
    for (SeqNum k = 0; k < 3; ++k) c.ingest_segment(data_segment(k * 1000, k * 1000 + 999));
    CHECK(c.handle_ack(5000) == 3);
    CHECK(c.buffer().empty());
  }

  TEST_CASE("stale acks do not move Base backwards") {
    Encoder enc(config(1.0, 1));
    enc.ingest_segment(data_segment(0, 999));
    enc.handle_ack(800);
    enc.handle_ack(300);
    CHECK(enc.base() == 800);
  }

  TEST_CASE("control segments bypass coding and data segments may not") {
    Segment syn;
    syn.flags = tcp_flag::kSyn;
    const auto s = Encoder::bypass_control(syn);
    CHECK(s.control_bypass);
    CHECK(s.control == syn);
    Segment rst;
    rst.flags = tcp_flag::kRst | tcp_flag::kAck;
    CHECK(Encoder::bypass_control(rst).control_bypass);
    CHECK_THROWS_AS(Encoder::bypass_control(data_segment(0, 9)), std::invalid_argument);
    Encoder enc(config(1.0, 1));
    CHECK_THROWS_AS(enc.ingest_segment(syn), std::invalid_argument);
  }

  TEST_CASE("full buffer drops whichever packet holds the newest bytes") {
    Encoder enc(config(1.0, 1, 2));
    enc.ingest_segment(data_segment(0, 99));
    enc.ingest_segment(data_segment(200, 299));
    enc.ingest_segment(data_segment(300, 399));  // newest: dropped
    REQUIRE(enc.buffer().size() == 2);
    CHECK(enc.buffer()[1].start == 200);
    enc.ingest_segment(data_segment(100, 199));  // older than a buffered packet: evicts [200, 299]
    REQUIRE(enc.buffer().size() == 2);
    CHECK(enc.buffer()[0].start == 0);
    CHECK(enc.buffer()[1].start == 100);
    CHECK(enc.stats().buffer_drops == 2);
  }

  TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(Encoder(config(0.9, 1)), std::invalid_argument);
    CHECK_THROWS_AS(Encoder(config(1.0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(Encoder(config(1.0, 256)), std::invalid_argument);
    CHECK_THROWS_AS(Encoder(config(1.0, 1, 0)), std::invalid_argument);
    CHECK_THROWS_AS(Encoder(config(NAN, 1)), std::invalid_argument);
  }

  TEST_CASE("property: buffered ranges match a set-of-bytes oracle under random repacketization") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
      Encoder enc(config(1.0 + (rng() % 100) / 100.0, 1 + rng() % 4, 1000));
      std::set<SeqNum> bytes;
      SeqNum frontier = 0;
      for (int step = 0; step < 40; ++step) {
        SeqNum first, last;
        if (frontier > 0 && rng() % 3 == 0) {
          first = static_cast<SeqNum>(rng() % frontier);
          last = first + static_cast<SeqNum>(rng() % 400);
        } else {
          first = frontier;
          last = first + static_cast<SeqNum>(rng() % 300);
        }
        enc.ingest_segment(data_segment(first, last));
        for (SeqNum b = first; b <= last; ++b) bytes.insert(b);
        frontier = std::max(frontier, last + 1);
      }
      std::set<SeqNum> buffered;
      SeqNum prev_end = 0;
      bool first_packet = true;
      std::size_t longest = 0;
      for (const auto& p : enc.buffer()) longest = std::max(longest, p.real_size());
      for (const auto& p : enc.buffer()) {
        if (!first_packet) REQUIRE(p.start == prev_end + 1);
        first_packet = false;
        prev_end = p.end;
        REQUIRE(p.data.size() == longest);
        for (SeqNum b = p.start; b <= p.end; ++b) REQUIRE(buffered.insert(b).second);
      }
      REQUIRE(buffered == bytes);
    }
  }

  TEST_CASE("property: emission count stays within floor and ceiling of m R") {
    std::mt19937_64 rng(77);
    for (double r : {1.0, 1.06, 1.1, 1.25, 1.333, 1.5, 2.7}) {
      Encoder enc(config(r, 3));
      std::size_t emitted = 0;
      for (std::uint64_t m = 1; m <= 2000; ++m) {
        const SeqNum first = static_cast<SeqNum>((m - 1) * 100);
        emitted += enc.ingest_segment(data_segment(first, first + 99)).size();
        if (m % 100 == 0) enc.handle_ack(first);
        const double mr = static_cast<double>(m) * r;
        REQUIRE(emitted >= static_cast<std::size_t>(std::floor(mr - 1e-9)));
        REQUIRE(emitted <= static_cast<std::size_t>(std::ceil(mr + 1e-9)));
        REQUIRE(enc.credit() >= 0.0);
        REQUIRE(enc.credit() < 1.0);
      }
    }
  }

  TEST_CASE("property: headers respect W, include the arrival and carry the latest ack as Base") {
    std::mt19937_64 rng(5);
    for (unsigned w : {1u, 2u, 3u, 5u}) {
      Encoder enc(config(1.3, w));
      SeqNum latest_ack = 0;
      for (SeqNum k = 0; k < 500; ++k) {
        const auto out = enc.ingest_segment(data_segment(k * 50, k * 50 + 49));
        for (const auto& pkt : out) {
          REQUIRE(pkt.header.n() <= w);
          REQUIRE(pkt.header.base == latest_ack);
          REQUIRE(pkt.header.entries.back().start == k * 50);
        }
        if (rng() % 4 == 0) {
          const auto candidate = static_cast<std::int64_t>(k) * 50 - static_cast<std::int64_t>(rng() % 200);
          if (candidate > latest_ack) latest_ack = static_cast<SeqNum>(candidate);
          enc.handle_ack(latest_ack);
        }
      }
    }
  }
}
