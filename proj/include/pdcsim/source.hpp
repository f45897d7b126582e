#pragma once

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdcsim/random.hpp"
#include "pdcsim/units.hpp"

namespace pdcsim {

enum class PumpMode { cw, pulsed };

struct PumpConfig {
  PumpMode mode = PumpMode::cw;
  double cw_pair_rate = 3250.0;      // pairs per second
  double pulse_rep_period = 13.342e-9;  // seconds
  double per_pulse_pair_mean = 0.01;
  double pair_mean_warning = 0.1;    // multi-pair regime above this

  /// Hard violations; the multi-pair warning is reported by `warnings`.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (mode == PumpMode::cw && !(cw_pair_rate >= 0.0))
      out.emplace_back("pump: cw_pair_rate must be nonnegative");
    if (mode == PumpMode::pulsed) {
      if (!(pulse_rep_period > 0.0))
        out.emplace_back("pump: pulse_rep_period must be positive");
      if (!(per_pulse_pair_mean > 0.0))
        out.emplace_back("pump: per_pulse_pair_mean must be positive");
    }
    return out;
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (mode == PumpMode::pulsed && per_pulse_pair_mean > pair_mean_warning)
      out.emplace_back("pump: per_pulse_pair_mean above multi-pair threshold");
    return out;
  }
};

struct DetectorConfig {
  double quantum_efficiency = 1.0;
  double dark_count_rate = 200.0;   // counts per second
  Duration output_delay = from_ns(18.0);
  Duration dead_time{0};

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0))
      out.emplace_back("detector: quantum_efficiency must lie in [0,1]");
    if (!(dark_count_rate >= 0.0))
      out.emplace_back("detector: dark_count_rate must be nonnegative");
    if (output_delay.count() < 0) out.emplace_back("detector: output_delay must be nonnegative");
    if (dead_time.count() < 0) out.emplace_back("detector: dead_time must be nonnegative");
    return out;
  }
};

struct CouplingConfig {
  double photon_b_launch_prob = 1.0;

  std::vector<std::string> violations() const {
    if (photon_b_launch_prob >= 0.0 && photon_b_launch_prob <= 1.0) return {};
    return {"coupling: photon_b_launch_prob must lie in [0,1]"};
  }
};

enum class HeraldKind { true_herald, dark_count };

/// One trigger-detector output pulse. `kind` and `pair_time` are ground truth;
/// the switching logic only ever sees `detection_time`.
struct HeraldEvent {
  Duration detection_time{0};
  HeraldKind kind = HeraldKind::true_herald;
  bool partner_launched = false;
  Duration pair_time{0};
};

/// Pair-emission times over [0, duration). CW: homogeneous Poisson process.
/// Pulsed: pulse k at k*period emits Poisson(mean) pairs, each a separate record.
inline std::vector<Duration> emit_pairs(const PumpConfig& pump, double duration, Rng& rng) {
  if (!(duration > 0.0)) throw std::invalid_argument("emit_pairs: duration must be positive");
  std::vector<Duration> times;
  if (pump.mode == PumpMode::cw) {
    if (!(pump.cw_pair_rate > 0.0)) return times;
    times.reserve(static_cast<std::size_t>(pump.cw_pair_rate * duration * 1.01) + 16);
    std::exponential_distribution<double> gap(pump.cw_pair_rate);
    double t = gap(rng);
    while (t < duration) {
      times.push_back(from_seconds(t));
      t += gap(rng);
    }
    return times;
  }

  if (!(pump.pulse_rep_period > 0.0))
    throw std::invalid_argument("emit_pairs: pulse_rep_period must be positive");
  const Duration period = from_seconds(pump.pulse_rep_period);
  const auto pulses = static_cast<std::int64_t>(std::ceil(duration / pump.pulse_rep_period));
  std::poisson_distribution<int> pairs(pump.per_pulse_pair_mean);
  for (std::int64_t k = 0; k < pulses; ++k) {
    const int j = pairs(rng);
    for (int i = 0; i < j; ++i) times.push_back(period * k);
  }
  return times;
}

/// Trigger-detector response: efficiency-thinned pairs delayed by the output
/// delay, merged with an independent dark-count stream, then filtered by a
/// non-paralyzable dead time.
inline std::vector<HeraldEvent> trigger_detect(const std::vector<Duration>& pair_times,
                                               const DetectorConfig& det,
                                               const CouplingConfig& coupling,
                                               double duration, Rng& rng) {
  if (!std::is_sorted(pair_times.begin(), pair_times.end()))
    throw std::invalid_argument("trigger_detect: pair times must be sorted");

  std::vector<HeraldEvent> raw;
  raw.reserve(pair_times.size());
  for (Duration t : pair_times) {
    if (!rng.bernoulli(det.quantum_efficiency)) continue;
    const bool launched = rng.bernoulli(coupling.photon_b_launch_prob);
    raw.push_back({t + det.output_delay, HeraldKind::true_herald, launched, t});
  }

  if (det.dark_count_rate > 0.0 && duration > 0.0) {
    std::exponential_distribution<double> gap(det.dark_count_rate);
    for (double t = gap(rng); t < duration; t += gap(rng)) {
      const Duration when = from_seconds(t);
      raw.push_back({when, HeraldKind::dark_count, false, when});
    }
    std::stable_sort(raw.begin(), raw.end(), [](const HeraldEvent& a, const HeraldEvent& b) {
      return a.detection_time < b.detection_time;
    });
  }

  if (det.dead_time.count() <= 0) return raw;

  std::vector<HeraldEvent> accepted;
  accepted.reserve(raw.size());
  for (const auto& ev : raw) {
    if (!accepted.empty() && ev.detection_time - accepted.back().detection_time < det.dead_time)
      continue;
    accepted.push_back(ev);
  }
  return accepted;
}

}  // namespace pdcsim
