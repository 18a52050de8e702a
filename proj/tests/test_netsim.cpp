#include <doctest.h>

#include <cmath>

#include "tcpnc/netsim.hpp"

using namespace tcpnc;

namespace {

void check_conservation(const SessionMetrics& m) {
  CHECK(m.forward_frames == m.frames_delivered + m.losses_injected + m.queue_drops + m.frames_in_flight);
}

SimConfig coded(double loss, double r, unsigned w, std::uint64_t seed) {
  SimConfig c;
  c.mode = Mode::tcpnc;
  c.loss_rate = loss;
  c.redundancy = r;
  c.window = w;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("netsim") {
  TEST_CASE("lossless TCP approaches link capacity minus headers") {
    SimConfig c;
    const auto m = run_session(c);
    const double ceiling = c.link_rate * c.mss / (c.mss + 40.0);
    CHECK(m.losses_injected == 0);
    CHECK(m.completed);
    CHECK(m.stream_intact);
    CHECK(m.goodput_bps <= ceiling);
    CHECK(m.goodput_bps >= 0.8 * ceiling);
    CHECK(m.goodput_bps == doctest::Approx(m.delivered_bytes * 8.0 / c.duration));
    check_conservation(m);
  }

  TEST_CASE("configuration bounds") {
    SimConfig c;
    c.loss_rate = 1.0;
    CHECK_THROWS_AS(run_session(c), ConfigError);
    c = {};
    c.link_rate = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.duration = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.window = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.window = 256;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.redundancy = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.coding_ns_per_packet = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.bottleneck_queue = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_NOTHROW(SimConfig{}.validate());
    CHECK(parse_mode("tcpnc") == Mode::tcpnc);
    CHECK(to_string(Mode::tcp) == "tcp");
    CHECK_THROWS_AS(parse_mode("udp"), ConfigError);
  }

  TEST_CASE("identical configuration gives bit-identical metrics and trace") {
    for (auto c : {coded(0.1, 1.25, 3, 7), SimConfig{}}) {
      c.loss_rate = 0.05;
      c.duration = 5;
      const auto a = run_session(c);
      const auto b = run_session(c);
      CHECK(a == b);
      c.seed += 1;
      CHECK(run_session(c).trace_digest != a.trace_digest);
    }
  }

  TEST_CASE("injected losses concentrate around the loss rate") {
    const double p = 0.1;
    std::uint64_t frames = 0;
    std::uint64_t lost = 0;
    for (std::uint64_t seed = 1; frames < 20000; ++seed) {
      const auto m = run_session(coded(p, 1.25, 3, seed));
      frames += m.forward_frames;
      lost += m.losses_injected;
    }
    const double n = static_cast<double>(frames);
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(static_cast<double>(lost) - n * p) <= 3 * sigma);
  }

  TEST_CASE("queue bound and frame conservation across modes and losses") {
    for (const double loss : {0.0, 0.02, 0.1}) {
      for (const std::size_t queue : {std::size_t{1}, std::size_t{5}, std::size_t{20}}) {
        SimConfig t;
        t.loss_rate = loss;
        t.bottleneck_queue = queue;
        t.duration = 4;
        auto n = coded(loss, 1.3, 2, 3);
        n.bottleneck_queue = queue;
        n.duration = 4;
        n.coding_ns_per_packet = 0;
        for (const auto& c : {t, n}) {
          const auto m = run_session(c);
          CHECK(m.max_queue_depth <= queue);
          check_conservation(m);
          CHECK(m.stream_intact);
        }
      }
    }
  }

  TEST_CASE("finite streams with short segments and repacketization arrive intact") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      auto c = coded(0.05, 1.2, 3, seed);
      c.stream_bytes = 400000;
      c.short_segment_prob = 0.2;
      c.repacketize_prob = 0.5;
      const auto m = run_session(c);
      CHECK(m.completed);
      CHECK(m.stream_intact);
      CHECK(m.delivered_bytes == c.stream_bytes);
    }
  }

  TEST_CASE("reverse loss knob drops ACKs only when enabled") {
    SimConfig c;
    c.duration = 5;
    CHECK(run_session(c).reverse_losses == 0);
    c.reverse_loss_rate = 0.05;
    const auto m = run_session(c);
    CHECK(m.reverse_losses > 0);
    CHECK(m.stream_intact);
  }

  TEST_CASE("coding cost slows a lossless coded session") {
    auto fast = coded(0.0, 1.0, 1, 1);
    fast.coding_ns_per_packet = 0;
    auto slow = fast;
    slow.coding_ns_per_packet = 3.5e6;
    const auto a = run_session(fast);
    const auto b = run_session(slow);
    CHECK(b.goodput_bps < a.goodput_bps);
    // One coded packet per 3.5 ms bounds the payload rate.
    CHECK(b.goodput_bps <= fast.mss * 8.0 / 3.5e-3);
  }
}
