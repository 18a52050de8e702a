#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "tcpnc/event_queue.hpp"

using namespace tcpnc;
using namespace std::chrono_literals;

TEST_SUITE("event_queue") {
  TEST_CASE("equal times fire in insertion order") {
    EventQueue q;
    std::vector<int> order;
    q.schedule(1s, [&] { order.push_back(1); });
    q.schedule(1s, [&] { order.push_back(2); });
    q.schedule(500ms, [&] { order.push_back(0); });
    q.schedule(1s, [&] { order.push_back(3); });
    while (q.step()) {
    }
    CHECK(order == std::vector<int>{0, 1, 2, 3});
    CHECK(q.now() == 1s);
  }

  TEST_CASE("empty queue terminates") {
    EventQueue q;
    CHECK_FALSE(q.step());
    q.run_until(2s);
    CHECK(q.now() == 2s);
    CHECK(q.dispatched() == 0);
  }

  TEST_CASE("scheduling in the past is a contract violation") {
    EventQueue q;
    q.run_until(1s);
    CHECK_THROWS_AS(q.schedule(999ms, [] {}), std::logic_error);
    CHECK_NOTHROW(q.schedule(1s, [] {}));
  }

  TEST_CASE("run_until leaves later events pending") {
    EventQueue q;
    int fired = 0;
    q.schedule(1s, [&] { ++fired; });
    q.schedule(3s, [&] { ++fired; });
    q.run_until(2s);
    CHECK(fired == 1);
    CHECK(q.size() == 1);
    CHECK(q.now() == 2s);
  }

  TEST_CASE("events scheduled from handlers keep the ordering") {
    EventQueue q;
    std::vector<int> order;
    q.schedule(1s, [&] {
      order.push_back(1);
      q.schedule_in(0ns, [&] { order.push_back(3); });
    });
    q.schedule(1s, [&] { order.push_back(2); });
    while (q.step()) {
    }
    CHECK(order == std::vector<int>{1, 2, 3});
  }

  TEST_CASE("one million events match a stable sort by time") {
    constexpr std::size_t n = 1'000'000;
    std::mt19937_64 rng(2024);
    std::vector<std::pair<std::int64_t, std::size_t>> expect;
    expect.reserve(n);
    EventQueue q;
    std::vector<std::size_t> fired;
    fired.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = static_cast<std::int64_t>(rng() % 5000);
      expect.emplace_back(t, i);
      q.schedule(SimTime{t}, [&fired, i] { fired.push_back(i); });
    }
    std::stable_sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    while (q.step()) {
    }
    REQUIRE(fired.size() == n);
    bool same = true;
    for (std::size_t i = 0; i < n; ++i) same = same && fired[i] == expect[i].second;
    CHECK(same);
    CHECK(q.dispatched() == n);
  }
}
