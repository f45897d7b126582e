#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdcsim/parallel.hpp"
#include "pdcsim/switch_loop.hpp"
#include "pdcsim/units.hpp"

namespace pdcsim {

/// N pseudo-demand sources pumped by one master pulsed laser. Each source is
/// pumped until it heralds, then holds its photon until the common gate time.
struct AncillaBankConfig {
  int n_sources = 4;
  double load_prob = 0.1;          // per pump pulse
  Duration rep_period = from_ns(13.342);
  double pass_survival = 0.74;
  Duration round_trip = from_ns(13.342);
  Duration gate_time = from_ns(13.342) * 100;
  // Per-pulse probability of a dark-count herald that stops pumping with an
  // empty loop. Zero models gated detection.
  double false_trigger_prob = 0.0;

  std::int64_t gate_pulse() const { return rep_period.count() > 0 ? gate_time / rep_period : 0; }
  std::int64_t rounds_per_period() const {
    return round_trip.count() > 0 ? rep_period / round_trip : 0;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (n_sources < 1) out.emplace_back("bank: n_sources must be at least 1");
    if (!(load_prob > 0.0 && load_prob <= 1.0)) out.emplace_back("bank: load_prob must lie in (0,1]");
    if (!(pass_survival >= 0.0 && pass_survival <= 1.0))
      out.emplace_back("bank: pass_survival must lie in [0,1]");
    if (!(false_trigger_prob >= 0.0 && false_trigger_prob <= 1.0))
      out.emplace_back("bank: false_trigger_prob must lie in [0,1]");
    if (rep_period.count() <= 0 || round_trip.count() <= 0) {
      out.emplace_back("bank: rep_period and round_trip must be positive");
      return out;
    }
    if (gate_time.count() <= 0 || gate_time % rep_period != Duration{0})
      out.emplace_back("bank: gate_time must be a positive multiple of rep_period");
    if (rep_period % round_trip != Duration{0})
      out.emplace_back("bank: rep_period must be a whole number of loop round trips");
    return out;
  }
};

struct BankOutcome {
  std::vector<std::optional<Duration>> load_time;  // per source; pulse k fires at k * rep_period
  bool all_loaded_by_gate = false;
  bool all_alive_at_gate = false;
};

/// Probability that all N sources hold a photon at the gate:
/// (sum_{k=1..M} r^(k-1) q s^(M-k))^N with r the per-pulse chance of no herald
/// and s the survival over one pump period.
inline double success_probability_exact(const AncillaBankConfig& cfg) {
  if (auto v = cfg.violations(); !v.empty()) throw ConfigError(std::move(v));
  const std::int64_t m = cfg.gate_pulse();
  if (m < 1) throw ConfigError({"bank: gate must be at pulse 1 or later"});
  const double q = cfg.load_prob;
  const double r = (1.0 - q) * (1.0 - cfg.false_trigger_prob);
  const double s = std::pow(cfg.pass_survival, static_cast<double>(cfg.rounds_per_period()));
  double single = 0.0;
  double r_pow = 1.0;
  for (std::int64_t k = 1; k <= m; ++k) {
    single += q * r_pow * std::pow(s, static_cast<double>(m - k));
    r_pow *= r;
  }
  return std::pow(single, cfg.n_sources);
}

/// Monte Carlo of the bank, pulse by pulse and round trip by round trip.
inline std::vector<BankOutcome> simulate_bank(const AncillaBankConfig& cfg, std::size_t trials,
                                              std::uint64_t seed, unsigned workers = 1) {
  if (auto v = cfg.violations(); !v.empty()) throw ConfigError(std::move(v));
  const std::int64_t m = cfg.gate_pulse();
  const std::int64_t rounds_per_period = cfg.rounds_per_period();
  return run_trials<BankOutcome>(trials, seed, workers, [&](std::size_t, Rng& rng) {
    BankOutcome out;
    out.load_time.resize(static_cast<std::size_t>(cfg.n_sources));
    out.all_loaded_by_gate = true;
    out.all_alive_at_gate = true;
    for (auto& load : out.load_time) {
      bool holds_photon = false;
      for (std::int64_t k = 1; k <= m; ++k) {
        if (rng.bernoulli(cfg.load_prob)) {
          load = cfg.rep_period * k;
          holds_photon = true;
        } else if (cfg.false_trigger_prob > 0.0 && rng.bernoulli(cfg.false_trigger_prob)) {
          load = cfg.rep_period * k;
        }
        if (!load) continue;
        // pump off from here on
        for (std::int64_t round = 0; holds_photon && round < (m - k) * rounds_per_period; ++round)
          holds_photon = rng.bernoulli(cfg.pass_survival);
        break;
      }
      if (!load) out.all_loaded_by_gate = false;
      if (!holds_photon) out.all_alive_at_gate = false;
    }
    return out;
  });
}

struct SweepRow {
  std::int64_t gate_pulse = 0;
  double exact = 0.0;
  double monte_carlo = 0.0;
  double stderr_mc = 0.0;
};

/// Success probability against gate pulse M, exact and simulated.
inline std::vector<SweepRow> success_curve(AncillaBankConfig cfg, std::span<const std::int64_t> gate_pulses,
                                           std::size_t trials, std::uint64_t seed,
                                           unsigned workers = 1) {
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < gate_pulses.size(); ++i) {
    cfg.gate_time = cfg.rep_period * gate_pulses[i];
    SweepRow row;
    row.gate_pulse = gate_pulses[i];
    row.exact = success_probability_exact(cfg);
    const auto outcomes = simulate_bank(cfg, trials, seed + i, workers);
    std::size_t ok = 0;
    for (const auto& o : outcomes) ok += o.all_alive_at_gate;
    row.monte_carlo = trials ? static_cast<double>(ok) / static_cast<double>(trials) : 0.0;
    row.stderr_mc = trials ? std::sqrt(row.monte_carlo * (1.0 - row.monte_carlo) /
                                       static_cast<double>(trials))
                           : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pdcsim
