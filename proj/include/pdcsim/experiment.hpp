#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdcsim/acquisition.hpp"
#include "pdcsim/analysis.hpp"
#include "pdcsim/config.hpp"
#include "pdcsim/loqc.hpp"
#include "pdcsim/switch_loop.hpp"

namespace pdcsim {

/// Rendered output files, name -> contents.
struct RunResult {
  std::map<std::string, std::string> files;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const char* reference_measurement(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::risetime_scan: return "Fig. 3 (Pockels cell rise-time scan)";
    case ExperimentKind::diagnostic_decay: return "Fig. 4 (storage-loop diagnostic decay)";
    case ExperimentKind::switchout: return "Fig. 5 (on-command switch-out)";
    case ExperimentKind::ancilla_bank: return "Fig. 6 (synchronized ancilla bank)";
  }
  return "";
}

struct LoopRun {
  Histogram histogram;
  PeakAreas peaks;
  std::uint64_t heralds = 0;
  std::uint64_t exited = 0;
  std::string acquisition_notes;
};

inline LoopRun run_loop_experiment(const ExperimentConfig& cfg, LoopProtocol protocol) {
  const Duration tau = cfg.loop.round_trip_time();
  const Duration offset = cfg.budget.launch_offset();
  const HistogramWindow window{offset, tau * (cfg.analysis.n_peaks + 1), cfg.analysis.bin_width};

  LoopRun run;
  if (cfg.acquisition_seconds > 0.0) {
    const Acquisition acq =
        simulate_acquisition(cfg.pump, cfg.detector, cfg.coupling, cfg.loop, cfg.budget, protocol,
                             cfg.acquisition_seconds, cfg.master_seed, cfg.worker_count);
    const auto herald_times = acq.herald_times();
    run.histogram = build_histogram(acq.fates, herald_times, window, tau);
    run.histogram.duration_label = cfg.acquisition_seconds;
    run.heralds = acq.heralds.size();
    run.exited = acq.coincidences();
    std::ostringstream os;
    os << "acquisition_s: " << cfg.acquisition_seconds << '\n'
       << "trigger_rate_hz: " << static_cast<double>(acq.heralds.size()) / cfg.acquisition_seconds << '\n'
       << "dark_triggers: " << acq.dark_heralds() << '\n'
       << "b_reachable_rate_hz: " << static_cast<double>(acq.b_reachable()) / cfg.acquisition_seconds << '\n'
       << "coincidence_rate_hz: " << static_cast<double>(acq.coincidences()) / cfg.acquisition_seconds << '\n';
    run.acquisition_notes = os.str();
  } else {
    const auto fates =
        protocol.kind == LoopProtocol::Kind::diagnostic
            ? run_diagnostic(cfg.loop, cfg.trials, cfg.master_seed, cfg.worker_count, cfg.budget)
            : run_switchout(cfg.loop, cfg.budget, protocol.n_chosen, cfg.trials, cfg.master_seed,
                            cfg.worker_count);
    run.histogram = build_histogram(fates, Duration{0}, window, tau);
    run.heralds = fates.size();
    run.exited = static_cast<std::uint64_t>(std::count_if(
        fates.begin(), fates.end(), [](const PhotonFate& f) { return f.exit_time.has_value(); }));
  }
  run.peaks = integrate_peaks(run.histogram, tau, offset, cfg.analysis.n_peaks);
  return run;
}

inline std::string csv(const Histogram& h) {
  std::ostringstream os;
  write_histogram_csv(os, h);
  return os.str();
}

inline std::string summary_header(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "experiment: " << to_string(cfg.experiment) << '\n'
     << "reference: " << reference_measurement(cfg.experiment) << '\n'
     << "seed: " << cfg.master_seed << '\n'
     << "round_trip_ns: " << format_ns(cfg.loop.round_trip_time()) << '\n'
     << "pass_survival: " << format_double(cfg.loop.pass_survival) << '\n';
  return os.str();
}

}  // namespace detail

/// Runs one configured experiment. Validation happens before any simulation.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  if (auto v = cfg.violations(); !v.empty()) throw ConfigError(std::move(v));

  RunResult result;
  std::ostringstream summary;
  summary << detail::summary_header(cfg);

  switch (cfg.experiment) {
    case ExperimentKind::diagnostic_decay: {
      const auto run = detail::run_loop_experiment(cfg, {LoopProtocol::Kind::diagnostic, 0});
      std::vector<double> areas(run.peaks.areas.begin(), run.peaks.areas.end());
      nlohmann::json fit_json;
      try {
        const DecayFit fit = fit_decay(areas, cfg.analysis.poisson_weights);
        fit_json = fit_record(fit);
        summary << "decay_base: " << detail::format_double(fit.base) << '\n'
                << "r2: " << detail::format_double(fit.r2) << '\n';
      } catch (const FitError& e) {
        fit_json = {{"b", nullptr}, {"r2", nullptr}, {"areas", areas}, {"error", e.what()}};
        summary << "decay_base: unavailable (" << e.what() << ")\n";
      }
      summary << "heralds: " << run.heralds << '\n' << "coincidences: " << run.exited << '\n'
              << run.acquisition_notes;
      result.files["histogram.csv"] = detail::csv(run.histogram);
      result.files["fit.json"] = fit_json.dump(2) + "\n";
      break;
    }
    case ExperimentKind::switchout: {
      const auto run =
          detail::run_loop_experiment(cfg, {LoopProtocol::Kind::switchout, cfg.n_chosen});
      std::vector<double> areas(run.peaks.areas.begin(), run.peaks.areas.end());
      const auto dominant = std::max_element(areas.begin(), areas.end()) - areas.begin() + 1;
      const double frac = run.heralds
          ? areas[static_cast<std::size_t>(cfg.n_chosen - 1)] / static_cast<double>(run.heralds)
          : 0.0;
      nlohmann::json fit_json = {{"b", nullptr},
                                 {"r2", nullptr},
                                 {"areas", areas},
                                 {"n_chosen", cfg.n_chosen},
                                 {"dominant_round_trip", dominant},
                                 {"chosen_peak_fraction", frac}};
      summary << "n_chosen: " << cfg.n_chosen << '\n'
              << "dominant_round_trip: " << dominant << '\n'
              << "chosen_peak_fraction: " << detail::format_double(frac) << '\n'
              << "heralds: " << run.heralds << '\n' << "coincidences: " << run.exited << '\n'
              << run.acquisition_notes;
      result.files["histogram.csv"] = detail::csv(run.histogram);
      result.files["fit.json"] = fit_json.dump(2) + "\n";
      break;
    }
    case ExperimentKind::risetime_scan: {
      std::vector<Duration> delays;
      for (Duration d = cfg.scan.start; d <= cfg.scan.stop; d += cfg.scan.step) delays.push_back(d);
      const auto points = scan_turn_on_delay(cfg.loop, delays, cfg.scan.trials_per_point,
                                             cfg.master_seed, cfg.worker_count);
      std::ostringstream os;
      os << "delay_ns,passed,trials\n";
      std::vector<double> x, y;
      for (const auto& p : points) {
        os << detail::format_ns(p.delay) << ',' << p.passed << ',' << p.trials << '\n';
        x.push_back(to_ns(p.delay));
        y.push_back(p.fraction());
      }
      nlohmann::json fit_json = {{"rise_time_ns", to_ns(cfg.loop.pockels_rise_time)}};
      try {
        const double width = fit_transition_width(x, y);
        fit_json["transition_width_ns"] = width;
        summary << "transition_width_ns: " << detail::format_double(width) << '\n';
      } catch (const FitError& e) {
        fit_json["transition_width_ns"] = nullptr;
        summary << "transition_width_ns: unavailable (" << e.what() << ")\n";
      }
      result.files["scan.csv"] = os.str();
      result.files["fit.json"] = fit_json.dump(2) + "\n";
      break;
    }
    case ExperimentKind::ancilla_bank: {
      std::vector<std::int64_t> gates;
      for (auto m = cfg.sweep.first; m <= cfg.sweep.last; m += cfg.sweep.step) gates.push_back(m);
      const auto rows =
          success_curve(cfg.bank, gates, cfg.trials, cfg.master_seed, cfg.worker_count);
      std::ostringstream os;
      os << "M,success_prob_exact,success_prob_mc,stderr\n";
      const SweepRow* best = rows.empty() ? nullptr : &rows.front();
      for (const auto& r : rows) {
        os << r.gate_pulse << ',' << detail::format_double(r.exact) << ','
           << detail::format_double(r.monte_carlo) << ',' << detail::format_double(r.stderr_mc)
           << '\n';
        if (r.exact > best->exact) best = &r;
      }
      summary << "n_sources: " << cfg.bank.n_sources << '\n'
              << "load_prob: " << detail::format_double(cfg.bank.load_prob) << '\n';
      if (best)
        summary << "best_gate_pulse: " << best->gate_pulse << '\n'
                << "best_success_prob: " << detail::format_double(best->exact) << '\n';
      result.files["sweep.csv"] = os.str();
      break;
    }
  }
  result.files["summary.txt"] = summary.str();
  return result;
}

/// Writes every file of `result` into `dir`, creating it if needed.
inline void write_outputs(const std::filesystem::path& dir, const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, body] : result.files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw OutputError("cannot write " + (dir / name).string());
  }
}

}  // namespace pdcsim
