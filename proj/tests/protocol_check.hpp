#pragma once

#include <vector>

#include "masim/mover.hpp"

// Every measure is directly preceded by move, ack; every move is followed by
// its ack (except a final unacknowledged move on abort).
inline bool strict_alternation(const std::vector<masim::ProtocolEvent>& ev, bool aborted) {
  using K = masim::ProtocolEvent::Kind;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    switch (ev[i].kind) {
      case K::kMove:
        if (i + 1 == ev.size()) return aborted;
        if (ev[i + 1].kind != K::kAck) return false;
        break;
      case K::kAck:
        if (i == 0 || ev[i - 1].kind != K::kMove) return false;
        break;
      case K::kMeasure:
        if (i < 2 || ev[i - 1].kind != K::kAck || ev[i - 2].kind != K::kMove) return false;
        break;
    }
  }
  return true;
}
