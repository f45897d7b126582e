#pragma once

#include <cstdint>
#include <vector>

#include "pdcsim/parallel.hpp"
#include "pdcsim/source.hpp"
#include "pdcsim/switch_loop.hpp"

namespace pdcsim {

/// What the loop is asked to do with each herald.
struct LoopProtocol {
  enum class Kind { diagnostic, switchout } kind = Kind::switchout;
  int n_chosen = 2;
};

/// A full heralded acquisition: pair emission, trigger detection, and one loop
/// trial per herald. fates[i] belongs to heralds[i].
struct Acquisition {
  std::vector<HeraldEvent> heralds;
  std::vector<PhotonFate> fates;
  double duration = 0.0;

  std::uint64_t dark_heralds() const {
    std::uint64_t n = 0;
    for (const auto& h : heralds) n += h.kind == HeraldKind::dark_count;
    return n;
  }
  /// Heralds whose photon b was actually launched toward the loop (and D_b).
  std::uint64_t b_reachable() const {
    std::uint64_t n = 0;
    for (const auto& h : heralds) n += h.kind == HeraldKind::true_herald && h.partner_launched;
    return n;
  }
  std::uint64_t coincidences() const {
    std::uint64_t n = 0;
    for (const auto& f : fates) n += f.outcome == FateOutcome::exited;
    return n;
  }
  std::vector<Duration> herald_times() const {
    std::vector<Duration> t;
    t.reserve(heralds.size());
    for (const auto& h : heralds) t.push_back(h.detection_time);
    return t;
  }
};

/// The switching logic reacts to every detector pulse identically; whether a
/// photon is really there is decided by ground truth. A launched photon
/// enters the loop at pair_time + fiber delay, while the pulses are timed
/// from the detection.
inline Acquisition simulate_acquisition(const PumpConfig& pump, const DetectorConfig& det,
                                        const CouplingConfig& coupling, const LoopConfig& loop,
                                        const DelayBudget& budget, LoopProtocol protocol,
                                        double duration, std::uint64_t seed,
                                        unsigned workers = 1) {
  require_valid(loop, budget);
  std::vector<std::string> bad = pump.violations();
  for (auto& v : det.violations()) bad.push_back(std::move(v));
  for (auto& v : coupling.violations()) bad.push_back(std::move(v));
  if (!bad.empty()) throw ConfigError(std::move(bad));

  Acquisition acq;
  acq.duration = duration;
  {
    // stream index 0 of a derived seed; trials use seed itself
    Rng rng = Rng::for_trial(~seed, 0);
    acq.heralds = trigger_detect(emit_pairs(pump, duration, rng), det, coupling, duration, rng);
  }

  // The plan depends only on timing relative to the herald.
  const auto rel = LoopTiming::for_herald(Duration{0}, budget, loop);
  PulseSchedule sched;
  if (protocol.kind == LoopProtocol::Kind::switchout)
    sched = schedule_pulses(Duration{0}, budget, loop, protocol.n_chosen);
  const TransitPlan plan = make_plan(rel, sched, loop);

  acq.fates = run_trials<PhotonFate>(acq.heralds.size(), seed, workers,
                                     [&](std::size_t i, Rng& rng) {
    const HeraldEvent& h = acq.heralds[i];
    PhotonFate fate;
    if (h.kind == HeraldKind::dark_count) {
      fate.outcome = FateOutcome::false_trigger_empty;
      return fate;
    }
    if (!h.partner_launched) {
      fate.outcome = FateOutcome::never_launched;
      return fate;
    }
    LoopTiming timing = rel;
    timing.launch = h.pair_time + budget.fiber_delay;
    // Drive at each transit is referenced to the detection; shift the plan if
    // the detector delay differs from the budgeted one.
    if (h.detection_time - h.pair_time == budget.apd_delay)
      return propagate_photon(plan, loop, timing, rng);
    const auto shifted = make_plan(timing, [&] {
      PulseSchedule s = sched;
      const Duration d = h.detection_time;
      if (s.p1) s.p1->start += d;
      if (s.p2) s.p2->start += d;
      return s;
    }(), loop);
    return propagate_photon(shifted, loop, timing, rng);
  });
  return acq;
}

}  // namespace pdcsim
