#include "tcpnc/event_queue.hpp"

#include <algorithm>
#include <stdexcept>

namespace tcpnc {

void EventQueue::schedule(SimTime at, Action action) {
  if (at < now_) throw std::logic_error("event scheduled in the past");
  heap_.push_back(Event{at, next_seq_++, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

bool EventQueue::step() {
  if (heap_.empty()) return false;
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Event ev = std::move(heap_.back());
  heap_.pop_back();
  now_ = ev.at;
  ++dispatched_;
  ev.action();
  return true;
}

void EventQueue::run_until(SimTime end) {
  stopped_ = false;
  while (!stopped_ && !heap_.empty() && heap_.front().at <= end) step();
  if (!stopped_ && now_ < end) now_ = end;
}

}  // namespace tcpnc
