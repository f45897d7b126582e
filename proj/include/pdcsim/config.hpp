#pragma once

// Experiment configuration: an INI file (sections of `key = value`, `;` or
// `#` comments) read and written through Boost.PropertyTree. Times are given
// in nanoseconds with picosecond resolution, rates in Hz, lengths in meters.
// See README.md for the full key list.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pdcsim/loqc.hpp"
#include "pdcsim/source.hpp"
#include "pdcsim/switch_loop.hpp"
#include "pdcsim/units.hpp"

namespace pdcsim {

enum class ExperimentKind { risetime_scan, diagnostic_decay, switchout, ancilla_bank };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::risetime_scan: return "risetime_scan";
    case ExperimentKind::diagnostic_decay: return "diagnostic_decay";
    case ExperimentKind::switchout: return "switchout";
    case ExperimentKind::ancilla_bank: return "ancilla_bank";
  }
  return "?";
}

struct ScanSettings {
  Duration start = from_ns(-5.0);
  Duration stop = from_ns(20.0);
  Duration step = from_ns(1.0);
  std::uint64_t trials_per_point = 20000;
};

struct AnalysisSettings {
  Duration bin_width = from_ns(1.0);
  int n_peaks = 15;
  bool poisson_weights = true;
};

struct SweepSettings {
  std::int64_t first = 5;
  std::int64_t last = 100;
  std::int64_t step = 5;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::diagnostic_decay;
  std::uint64_t trials = 1'000'000;
  std::uint64_t master_seed = 42;
  unsigned worker_count = 1;
  std::string output_path = "out";
  // > 0: drive the loop from the pair source and trigger detector for this
  // many simulated seconds instead of running `trials` launched photons.
  double acquisition_seconds = 0.0;

  PumpConfig pump;
  DetectorConfig detector;
  CouplingConfig coupling;
  LoopConfig loop;
  DelayBudget budget;
  int n_chosen = 3;
  AnalysisSettings analysis;
  ScanSettings scan;
  AncillaBankConfig bank;
  SweepSettings sweep;

  /// Every violation across the embedded configs.
  std::vector<std::string> violations() const {
    std::vector<std::string> out = validate_config(loop, budget);
    auto add = [&](std::vector<std::string> v) {
      for (auto& s : v) out.push_back(std::move(s));
    };
    add(pump.violations());
    add(detector.violations());
    add(coupling.violations());
    if (worker_count < 1) out.emplace_back("run: workers must be at least 1");
    if (acquisition_seconds < 0.0) out.emplace_back("run: acquisition_s must be nonnegative");
    if (experiment == ExperimentKind::switchout &&
        (n_chosen < 1 || n_chosen > loop.max_round_trips))
      out.emplace_back("switchout: n_chosen must lie in [1, max_round_trips]");
    if (analysis.n_peaks < 1) out.emplace_back("analysis: n_peaks must be at least 1");
    if (analysis.bin_width.count() <= 0 || analysis.bin_width * 2 >= loop.round_trip_time())
      out.emplace_back("analysis: bin width must be positive and below half a round trip");
    if (experiment == ExperimentKind::risetime_scan &&
        (scan.step.count() <= 0 || scan.stop <= scan.start))
      out.emplace_back("scan: need start < stop and a positive step");
    if (experiment == ExperimentKind::ancilla_bank) {
      add(bank.violations());
      if (sweep.first < 1 || sweep.last < sweep.first || sweep.step < 1)
        out.emplace_back("bank: sweep range must satisfy 1 <= first <= last, step >= 1");
    }
    return out;
  }
};

class ConfigParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_ns(Duration d) {
  const auto ps = d.count();
  std::ostringstream os;
  if (ps < 0) os << '-';
  const auto mag = ps < 0 ? -ps : ps;
  os << mag / 1000;
  if (mag % 1000) {
    std::string frac = std::to_string(1000 + mag % 1000).substr(1);
    while (frac.back() == '0') frac.pop_back();
    os << '.' << frac;
  }
  return os.str();
}

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigParseError("bad number for " + key + ": '" + text + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigParseError("bad integer for " + key + ": '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigParseError("bad boolean for " + key + ": '" + text + "'");
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }

// One binding per config key; the same table drives reading and writing so
// the two cannot drift apart.
struct Field {
  const char* path;
  std::string (*get)(const ExperimentConfig&);
  void (*set)(ExperimentConfig&, const std::string& key, const std::string& value);
};

#define PDCSIM_NUM(path, expr)                                                       \
  Field {                                                                            \
    path, [](const ExperimentConfig& c) { return format_double(c.expr); },           \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {        \
          c.expr = parse_double(k, v);                                               \
        }                                                                            \
  }
#define PDCSIM_INT(path, expr)                                                                \
  Field {                                                                                     \
    path, [](const ExperimentConfig& c) { return std::to_string(c.expr); },                   \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
          c.expr = parse_int<std::remove_cvref_t<decltype(c.expr)>>(k, v);                    \
        }                                                                                     \
  }
#define PDCSIM_NS(path, expr)                                                        \
  Field {                                                                            \
    path, [](const ExperimentConfig& c) { return format_ns(c.expr); },               \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {        \
          c.expr = from_ns(parse_double(k, v));                                      \
        }                                                                            \
  }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"run.experiment", [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         for (auto kind : {ExperimentKind::risetime_scan, ExperimentKind::diagnostic_decay,
                           ExperimentKind::switchout, ExperimentKind::ancilla_bank})
           if (v == to_string(kind)) {
             c.experiment = kind;
             return;
           }
         throw ConfigParseError("unknown value for " + k + ": '" + v + "'");
       }},
      PDCSIM_INT("run.trials", trials),
      PDCSIM_INT("run.seed", master_seed),
      PDCSIM_INT("run.workers", worker_count),
      {"run.out", [](const ExperimentConfig& c) { return c.output_path; },
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_path = v; }},
      PDCSIM_NUM("run.acquisition_s", acquisition_seconds),

      {"source.mode",
       [](const ExperimentConfig& c) { return std::string(c.pump.mode == PumpMode::cw ? "cw" : "pulsed"); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "cw") c.pump.mode = PumpMode::cw;
         else if (v == "pulsed") c.pump.mode = PumpMode::pulsed;
         else throw ConfigParseError("unknown value for " + k + ": '" + v + "'");
       }},
      PDCSIM_NUM("source.cw_pair_rate_hz", pump.cw_pair_rate),
      {"source.pulse_period_ns",
       [](const ExperimentConfig& c) { return format_double(c.pump.pulse_rep_period * 1e9); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.pump.pulse_rep_period = parse_double(k, v) * 1e-9;
       }},
      PDCSIM_NUM("source.pair_mean", pump.per_pulse_pair_mean),
      PDCSIM_NUM("source.pair_mean_warning", pump.pair_mean_warning),

      PDCSIM_NUM("detector.efficiency", detector.quantum_efficiency),
      PDCSIM_NUM("detector.dark_rate_hz", detector.dark_count_rate),
      PDCSIM_NS("detector.dead_time_ns", detector.dead_time),
      PDCSIM_NUM("coupling.launch_prob", coupling.photon_b_launch_prob),

      PDCSIM_NUM("loop.length_m", loop.loop_length),
      PDCSIM_NUM("loop.pass_survival", loop.pass_survival),
      PDCSIM_NS("loop.rise_time_ns", loop.pockels_rise_time),
      PDCSIM_NUM("loop.switch_error_prob", loop.switch_error_prob),
      PDCSIM_NS("loop.min_pulse_width_ns", loop.min_drive_pulse_width),
      PDCSIM_NS("loop.pulse_width_ns", loop.drive_pulse_width),
      {"loop.hwp_deg", [](const ExperimentConfig& c) { return format_double(deg(c.loop.hwp.fast_axis_angle)); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.loop.hwp.fast_axis_angle = rad(parse_double(k, v));
       }},
      PDCSIM_NUM("loop.pc_position", loop.pc_position),
      PDCSIM_INT("loop.max_round_trips", loop.max_round_trips),

      PDCSIM_NS("delay.apd_ns", budget.apd_delay),
      PDCSIM_NS("delay.gate_dead_time_ns", budget.gate_dead_time),
      PDCSIM_NS("delay.trailing_edge_ns", budget.trailing_edge_time),
      PDCSIM_NS("delay.or_gate_ns", budget.or_gate_delay),
      PDCSIM_NS("delay.driver_ns", budget.driver_delay),
      PDCSIM_NS("delay.cable_ns", budget.cable_delay),
      PDCSIM_NS("delay.fiber_ns", budget.fiber_delay),

      PDCSIM_INT("switchout.n_chosen", n_chosen),

      PDCSIM_NS("analysis.bin_width_ns", analysis.bin_width),
      PDCSIM_INT("analysis.n_peaks", analysis.n_peaks),
      {"analysis.poisson_weights",
       [](const ExperimentConfig& c) { return std::string(c.analysis.poisson_weights ? "true" : "false"); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.analysis.poisson_weights = parse_bool(k, v);
       }},

      PDCSIM_NS("scan.start_ns", scan.start),
      PDCSIM_NS("scan.stop_ns", scan.stop),
      PDCSIM_NS("scan.step_ns", scan.step),
      PDCSIM_INT("scan.trials_per_point", scan.trials_per_point),

      PDCSIM_INT("bank.n_sources", bank.n_sources),
      PDCSIM_NUM("bank.load_prob", bank.load_prob),
      PDCSIM_NUM("bank.pass_survival", bank.pass_survival),
      PDCSIM_NS("bank.rep_period_ns", bank.rep_period),
      PDCSIM_NUM("bank.false_trigger_prob", bank.false_trigger_prob),
      PDCSIM_INT("bank.sweep_first", sweep.first),
      PDCSIM_INT("bank.sweep_last", sweep.last),
      PDCSIM_INT("bank.sweep_step", sweep.step),
  };
  return table;
}

#undef PDCSIM_NUM
#undef PDCSIM_INT
#undef PDCSIM_NS

// Derived quantities that are not independent keys.
inline void sync_derived(ExperimentConfig& c) {
  c.detector.output_delay = c.budget.apd_delay;
  c.bank.round_trip = c.loop.round_trip_time();
  c.bank.gate_time = c.bank.rep_period * c.sweep.last;
}

}  // namespace detail

using ConfigTree = boost::property_tree::ptree;

inline ConfigTree to_tree(const ExperimentConfig& cfg) {
  ConfigTree tree;
  for (const auto& f : detail::fields()) tree.put(f.path, f.get(cfg));
  return tree;
}

/// Starts from defaults and applies every key in `tree`; unknown keys are
/// errors so typos do not silently fall back to defaults.
inline ExperimentConfig from_tree(const ConfigTree& tree) {
  std::map<std::string, const detail::Field*> by_path;
  for (const auto& f : detail::fields()) by_path[f.path] = &f;

  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigParseError("key outside a section: " + section);
    for (const auto& [key, value] : body) {
      const std::string path = section + "." + key;
      auto it = by_path.find(path);
      if (it == by_path.end()) throw ConfigParseError("unknown key: " + path);
      it->second->set(cfg, path, value.data());
    }
  }
  detail::sync_derived(cfg);
  return cfg;
}

inline ExperimentConfig parse_config(std::istream& in) {
  ConfigTree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigParseError(e.what());
  }
  return from_tree(tree);
}

inline void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  boost::property_tree::write_ini(out, to_tree(cfg));
}

/// Applies `section.key=value` overrides on top of `cfg`.
inline ExperimentConfig apply_overrides(const ExperimentConfig& cfg,
                                        const std::vector<std::string>& overrides) {
  ConfigTree tree = to_tree(cfg);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigParseError("override must look like section.key=value: " + o);
    std::string key = o.substr(0, eq);
    if (key.find('.') == std::string::npos)
      throw ConfigParseError("override key needs a section: " + key);
    tree.put(key, o.substr(eq + 1));
  }
  return from_tree(tree);
}

// ---- presets --------------------------------------------------------------

/// Named configurations reproducing the reference measurements: a 4 m loop,
/// 10 ns Pockels rise time, 26% loss per round trip, 500 ns fiber delay, and
/// the trigger rates of the CW source.
inline std::map<std::string, ExperimentConfig> presets() {
  std::map<std::string, ExperimentConfig> out;
  ExperimentConfig base;
  base.pump.cw_pair_rate = 3250.0;
  base.detector.dark_count_rate = 200.0;
  base.coupling.photon_b_launch_prob = 200.0 / 3250.0;
  detail::sync_derived(base);

  {
    ExperimentConfig c = base;
    c.experiment = ExperimentKind::risetime_scan;
    c.output_path = "out/fig3_risetime";
    out["fig3_risetime"] = c;
  }
  {
    ExperimentConfig c = base;
    c.experiment = ExperimentKind::diagnostic_decay;
    c.loop.hwp = WaveplateSetting::degrees(22.5);
    c.output_path = "out/fig4_diagnostic";
    out["fig4_diagnostic"] = c;
  }
  for (int n : {2, 3, 4, 5}) {
    ExperimentConfig c = base;
    c.experiment = ExperimentKind::switchout;
    c.n_chosen = n;
    c.loop.switch_error_prob = 0.03;
    c.output_path = "out/fig5_switchout_n" + std::to_string(n);
    out["fig5_switchout_n" + std::to_string(n)] = c;
  }
  {
    ExperimentConfig c = base;
    c.experiment = ExperimentKind::ancilla_bank;
    c.trials = 20000;
    c.bank.n_sources = 4;
    c.bank.load_prob = 0.1;
    c.bank.pass_survival = 0.74;
    c.bank.rep_period = c.loop.round_trip_time();
    c.output_path = "out/loqc_sweep";
    detail::sync_derived(c);
    out["loqc_sweep"] = c;
  }
  return out;
}

}  // namespace pdcsim
