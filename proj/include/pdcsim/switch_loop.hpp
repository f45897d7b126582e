#pragma once

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdcsim/parallel.hpp"
#include "pdcsim/polarization.hpp"
#include "pdcsim/random.hpp"
#include "pdcsim/units.hpp"

namespace pdcsim {

/// Free-space storage loop closed by a polarizing beamsplitter, with a
/// half-wave plate followed by a Pockels cell inside it.
///
/// Loss is a single per-round-trip survival probability. In the reference
/// setup the 26% loss splits into ~18% component losses and ~8% alignment and
/// focusing; only the product matters for the statistics.
struct LoopConfig {
  double loop_length = 4.0;  // meters
  double pass_survival = 0.74;
  Duration pockels_rise_time = from_ns(10.0);
  double switch_error_prob = 0.0;
  Duration min_drive_pulse_width = from_ns(100.0);
  Duration drive_pulse_width = from_ns(100.0);
  WaveplateSetting hwp{};
  // Where along the round trip the photon crosses the Pockels cell, as a
  // fraction of the round-trip time after leaving the beamsplitter.
  double pc_position = 0.5;
  int max_round_trips = 50;

  Duration round_trip_time() const { return light_travel_time(loop_length); }
  Duration pc_offset() const {
    return std::chrono::round<Duration>(round_trip_time() * pc_position);
  }
};

/// Feed-forward electronics between the trigger detector and the Pockels
/// cell, and the fiber delay that has to cover them.
struct DelayBudget {
  Duration apd_delay = from_ns(18.0);
  Duration gate_dead_time = from_ns(200.0);
  Duration trailing_edge_time = from_ns(300.0);  // includes the gate dead time
  Duration or_gate_delay = from_ns(18.0);
  Duration driver_delay = from_ns(38.0);
  Duration cable_delay = from_ns(60.0);
  Duration fiber_delay = from_ns(500.0);

  /// Earliest time after photon emission at which p1 can have switched off.
  Duration required() const {
    return apd_delay + trailing_edge_time + or_gate_delay + driver_delay + cable_delay;
  }

  /// Offset from the trigger detection to photon b entering the loop.
  Duration launch_offset() const { return fiber_delay - apd_delay; }
};

struct PulseWindow {
  Duration start{0};
  Duration width{0};

  Duration end() const { return start + width; }
};

/// p1 traps the photon, p2 releases it. n_chosen = 1 needs neither.
struct PulseSchedule {
  std::optional<PulseWindow> p1;
  std::optional<PulseWindow> p2;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& item : v) s += "\n  " + item;
    return s;
  }
  std::vector<std::string> violations_;
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every violated constraint; empty means the configuration is usable.
inline std::vector<std::string> validate_config(const LoopConfig& cfg, const DelayBudget& budget) {
  std::vector<std::string> out;
  auto ns = [](Duration d) {
    std::ostringstream os;
    os << to_ns(d) << " ns";
    return os.str();
  };

  if (!(cfg.loop_length > 0.0)) out.emplace_back("loop: loop_length must be positive");
  const Duration tau = cfg.round_trip_time();
  if (tau <= cfg.pockels_rise_time)
    out.emplace_back("loop: round-trip time " + ns(tau) + " does not exceed Pockels rise time " +
                     ns(cfg.pockels_rise_time));
  if (!(cfg.pass_survival > 0.0 && cfg.pass_survival <= 1.0))
    out.emplace_back("loop: pass_survival must lie in (0,1]");
  if (!(cfg.switch_error_prob >= 0.0 && cfg.switch_error_prob <= 1.0))
    out.emplace_back("loop: switch_error_prob must lie in [0,1]");
  if (cfg.pockels_rise_time.count() < 0) out.emplace_back("loop: rise time must be nonnegative");
  if (cfg.drive_pulse_width < cfg.min_drive_pulse_width)
    out.emplace_back("loop: drive pulse width " + ns(cfg.drive_pulse_width) +
                     " below minimum " + ns(cfg.min_drive_pulse_width));
  if (!cfg.hwp.valid()) out.emplace_back("loop: waveplate angle must lie in [0, pi)");
  if (!(cfg.pc_position > 0.0 && cfg.pc_position <= 1.0))
    out.emplace_back("loop: pc_position must lie in (0,1]");
  if (cfg.max_round_trips < 1) out.emplace_back("loop: max_round_trips must be at least 1");

  const Duration parts[] = {budget.apd_delay,     budget.gate_dead_time, budget.trailing_edge_time,
                            budget.or_gate_delay, budget.driver_delay,   budget.cable_delay,
                            budget.fiber_delay};
  if (std::any_of(std::begin(parts), std::end(parts), [](Duration d) { return d.count() < 0; }))
    out.emplace_back("delay: all delays must be nonnegative");
  if (budget.trailing_edge_time < budget.gate_dead_time)
    out.emplace_back("delay: trailing_edge_time must include the gate dead time");
  if (budget.fiber_delay < budget.required())
    out.emplace_back("delay: fiber delay " + ns(budget.fiber_delay) + " shorter than required " +
                     ns(budget.required()));
  return out;
}

/// Drive level of the Pockels cell at `t` given OR-ed drive windows. Each
/// window ramps linearly 0->1 over `rise` from its start and 1->0 over `rise`
/// from its end.
inline double drive_fraction_at(Duration t, std::span<const PulseWindow> windows, Duration rise) {
  double level = 0.0;
  for (const auto& w : windows) {
    if (t < w.start || t >= w.end() + rise) continue;
    double up = 1.0, down = 1.0;
    if (rise.count() > 0) {
      up = static_cast<double>((t - w.start).count()) / static_cast<double>(rise.count());
      down = 1.0 - static_cast<double>((t - w.end()).count()) / static_cast<double>(rise.count());
    } else if (t >= w.end()) {
      down = 0.0;
    }
    level = std::max(level, std::clamp(std::min(up, down), 0.0, 1.0));
  }
  return level;
}

inline double drive_fraction_at(Duration t, const PulseSchedule& s, Duration rise) {
  PulseWindow buf[2];
  std::size_t n = 0;
  if (s.p1) buf[n++] = *s.p1;
  if (s.p2) buf[n++] = *s.p2;
  return drive_fraction_at(t, std::span<const PulseWindow>(buf, n), rise);
}

/// Photon-b transit geometry for one herald.
struct LoopTiming {
  Duration launch{0};
  Duration round_trip{0};
  Duration pc_offset{0};

  static LoopTiming for_herald(Duration herald_time, const DelayBudget& budget,
                               const LoopConfig& cfg) {
    return {herald_time + budget.launch_offset(), cfg.round_trip_time(), cfg.pc_offset()};
  }

  /// k-th crossing of the Pockels cell, k >= 1.
  Duration transit(int k) const { return launch + round_trip * (k - 1) + pc_offset; }
  /// Arrival back at the beamsplitter after n round trips.
  Duration exit(int n) const { return launch + round_trip * n; }
};

/// Places p1 so the cell is fully on at the first transit and fully off by the
/// second, and p2 so it is fully on from the n_chosen-th transit while every
/// earlier transit after the first sees zero drive. The switching edges sit
/// midway through the slack between transits.
inline PulseSchedule schedule_pulses(Duration herald_time, const DelayBudget& budget,
                                     const LoopConfig& cfg, int n_chosen) {
  if (n_chosen < 1) throw ScheduleError("n_chosen must be at least 1");
  if (n_chosen > cfg.max_round_trips)
    throw ScheduleError("n_chosen exceeds the simulated round-trip cap");
  const Duration rise = cfg.pockels_rise_time;
  const Duration tau = cfg.round_trip_time();
  if (tau <= rise)
    throw ScheduleError("round-trip time too short for the Pockels rise time");
  if (cfg.drive_pulse_width < cfg.min_drive_pulse_width)
    throw ScheduleError("drive pulse width below electronics minimum");

  PulseSchedule sched;
  if (n_chosen == 1) return sched;

  const LoopTiming timing = LoopTiming::for_herald(herald_time, budget, cfg);
  const Duration margin = (tau - rise) / 2;
  const Duration width = cfg.drive_pulse_width;

  const Duration p1_end = timing.transit(1) + margin;
  const Duration earliest_p1_end =
      herald_time - budget.apd_delay + budget.required();
  if (p1_end < earliest_p1_end)
    throw ScheduleError("fiber delay too short: p1 cannot switch off after the first transit");
  if (width < margin + rise)
    throw ScheduleError("p1 too short to be fully on at the first transit");
  sched.p1 = PulseWindow{p1_end - width, width};
  sched.p2 = PulseWindow{timing.transit(n_chosen - 1) + margin, width};

  // The edges above satisfy these by construction; keep them checked in case
  // rounding of tau or the offset to picoseconds ever breaks one.
  auto at = [&](int k) { return drive_fraction_at(timing.transit(k), sched, rise); };
  if (at(1) != 1.0 || at(n_chosen) != 1.0)
    throw ScheduleError("schedule does not fully drive the switching transits");
  for (int k = 2; k < n_chosen; ++k)
    if (at(k) != 0.0) throw ScheduleError("schedule drives a storage transit");
  return sched;
}

enum class FateOutcome { exited, lost_in_loop, never_launched, false_trigger_empty };

/// Result of one heralded trial. exit_time is set iff outcome == exited and
/// then equals launch_time + round_trip * round_trip_time.
struct PhotonFate {
  FateOutcome outcome = FateOutcome::lost_in_loop;
  int round_trip = 0;
  Duration launch_time{0};
  std::optional<Duration> exit_time;
};

/// Pockels drive seen at each transit k = 1..cap (index k-1).
struct TransitPlan {
  std::vector<double> drive;
};

inline TransitPlan make_plan(const LoopTiming& timing, const PulseSchedule& sched,
                             const LoopConfig& cfg) {
  TransitPlan plan;
  plan.drive.resize(static_cast<std::size_t>(cfg.max_round_trips));
  for (int k = 1; k <= cfg.max_round_trips; ++k)
    plan.drive[k - 1] = drive_fraction_at(timing.transit(k), sched, cfg.pockels_rise_time);
  return plan;
}

/// Follows one photon that has entered the loop vertically polarized. Per
/// round trip: half-wave plate, Pockels cell (a commanded rotation fails with
/// probability switch_error_prob), survival, then the beamsplitter either
/// reflects it out (vertical) or keeps it (horizontal).
inline PhotonFate propagate_photon(const TransitPlan& plan, const LoopConfig& cfg,
                                   const LoopTiming& timing, Rng& rng) {
  PhotonFate fate;
  fate.launch_time = timing.launch;
  auto state = PolarizationState::vertical();
  for (int k = 1; k <= cfg.max_round_trips; ++k) {
    state = hwp_apply(state, cfg.hwp);
    double drive = plan.drive[k - 1];
    if (drive > 0.0 && cfg.switch_error_prob > 0.0 && rng.bernoulli(cfg.switch_error_prob))
      drive = 0.0;
    state = pockels_apply(state, drive);
    if (!rng.bernoulli(cfg.pass_survival)) {
      fate.outcome = FateOutcome::lost_in_loop;
      return fate;
    }
    if (rng.bernoulli(pbs_probabilities(state).reflect)) {
      fate.outcome = FateOutcome::exited;
      fate.round_trip = k;
      fate.exit_time = timing.exit(k);
      return fate;
    }
    state = PolarizationState::horizontal();
  }
  fate.outcome = FateOutcome::lost_in_loop;
  return fate;
}

inline void require_valid(const LoopConfig& cfg, const DelayBudget& budget) {
  if (auto v = validate_config(cfg, budget); !v.empty()) throw ConfigError(std::move(v));
}

/// On-command switch-out after n_chosen round trips. Each trial is a herald
/// at t = 0 with its photon launched.
inline std::vector<PhotonFate> run_switchout(const LoopConfig& cfg, const DelayBudget& budget,
                                             int n_chosen, std::size_t trials,
                                             std::uint64_t seed, unsigned workers = 1) {
  require_valid(cfg, budget);
  const auto timing = LoopTiming::for_herald(Duration{0}, budget, cfg);
  const auto plan = make_plan(timing, schedule_pulses(Duration{0}, budget, cfg, n_chosen), cfg);
  return run_trials<PhotonFate>(trials, seed, workers, [&](std::size_t, Rng& rng) {
    return propagate_photon(plan, cfg, timing, rng);
  });
}

/// Loop diagnostic: Pockels cell disconnected, the half-wave plate (set in
/// cfg.hwp, normally 22.5 degrees) turns every pass to 45 degrees.
inline std::vector<PhotonFate> run_diagnostic(const LoopConfig& cfg, std::size_t trials,
                                              std::uint64_t seed, unsigned workers = 1,
                                              const DelayBudget& budget = {}) {
  require_valid(cfg, budget);
  const auto timing = LoopTiming::for_herald(Duration{0}, budget, cfg);
  const TransitPlan plan{std::vector<double>(static_cast<std::size_t>(cfg.max_round_trips), 0.0)};
  return run_trials<PhotonFate>(trials, seed, workers, [&](std::size_t, Rng& rng) {
    return propagate_photon(plan, cfg, timing, rng);
  });
}

struct ScanPoint {
  Duration delay{0};
  std::uint64_t passed = 0;
  std::uint64_t trials = 0;

  double fraction() const {
    return trials ? static_cast<double>(passed) / static_cast<double>(trials) : 0.0;
  }
};

/// Rise-time measurement: a vertically polarized photon crosses the cell
/// `delay` after the drive's leading edge and is counted if it then passes a
/// horizontal analyzer. The drive window is long enough that only the rising
/// edge matters.
inline std::vector<ScanPoint> scan_turn_on_delay(const LoopConfig& cfg,
                                                 std::span<const Duration> delays,
                                                 std::uint64_t trials_per_point,
                                                 std::uint64_t seed, unsigned workers = 1) {
  Duration longest{0};
  for (Duration d : delays) longest = std::max(longest, d);
  const PulseWindow window{Duration{0},
                           std::max(cfg.drive_pulse_width, longest + cfg.pockels_rise_time)};
  return run_trials<ScanPoint>(delays.size(), seed, workers, [&](std::size_t i, Rng& rng) {
    ScanPoint pt{delays[i], 0, trials_per_point};
    const double drive =
        drive_fraction_at(delays[i], std::span<const PulseWindow>(&window, 1), cfg.pockels_rise_time);
    for (std::uint64_t t = 0; t < trials_per_point; ++t) {
      double d = drive;
      if (d > 0.0 && cfg.switch_error_prob > 0.0 && rng.bernoulli(cfg.switch_error_prob)) d = 0.0;
      const auto out = pockels_apply(PolarizationState::vertical(), d);
      if (rng.bernoulli(pbs_probabilities(out).transmit)) ++pt.passed;
    }
    return pt;
  });
}

}  // namespace pdcsim
