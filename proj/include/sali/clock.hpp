#pragma once

#include <chrono>
#include <cstdint>

namespace sali {

// Timestamps are coarse monotone "ticks" (microseconds since process start).
// Speed estimates only need the ratio of tick deltas to be consistent, so the
// unit is arbitrary; operations sample the clock at most once, lazily.
using Tick = std::uint64_t;

inline Tick now_ticks() {
  static const auto t0 = std::chrono::steady_clock::now();
  return static_cast<Tick>(std::chrono::duration_cast<std::chrono::microseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count());
}

}  // namespace sali
