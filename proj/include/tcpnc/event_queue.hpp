#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tcpnc/tcp_reno.hpp"

namespace tcpnc {

// Discrete-event scheduler keyed by (time, insertion sequence): events fire
// in time order and equal times fire first-in first-out.
class EventQueue {
 public:
  using Action = std::function<void()>;

  // Throws std::logic_error when at precedes now().
  void schedule(SimTime at, Action action);
  void schedule_in(SimTime delay, Action action) { schedule(now_ + delay, std::move(action)); }

  // Fires the earliest event. False when the queue is empty.
  bool step();
  // Fires every event with time <= end, then advances the clock to end.
  void run_until(SimTime end);
  void stop() { stopped_ = true; }

  SimTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  std::vector<Event> heap_;
  SimTime now_{0};
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  bool stopped_ = false;
};

}  // namespace tcpnc
