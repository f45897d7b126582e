#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ratio>

namespace pdcsim {

// All simulated times are integer picoseconds so that multiples of the loop
// round-trip time stay exact.
using Duration = std::chrono::duration<std::int64_t, std::pico>;

inline constexpr double kSpeedOfLight = 2.998e8;  // m/s, free space

inline Duration from_seconds(double s) {
  return std::chrono::round<Duration>(std::chrono::duration<double>(s));
}

inline Duration from_ns(double ns) { return from_seconds(ns * 1e-9); }

inline constexpr double to_seconds(Duration d) {
  return static_cast<double>(d.count()) * 1e-12;
}

inline constexpr double to_ns(Duration d) {
  return static_cast<double>(d.count()) * 1e-3;
}

/// Light travel time over `meters` of free space, rounded to the nearest ps.
inline Duration light_travel_time(double meters) {
  return from_seconds(meters / kSpeedOfLight);
}

}  // namespace pdcsim
