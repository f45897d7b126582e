#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "pdcsim/switch_loop.hpp"

namespace pdcsim {
namespace {

std::map<int, std::size_t> exit_counts(const std::vector<PhotonFate>& fates) {
  std::map<int, std::size_t> m;
  for (const auto& f : fates)
    if (f.outcome == FateOutcome::exited) ++m[f.round_trip];
  return m;
}

bool within_sigma(double count, double n, double p, double k) {
  const double sd = std::sqrt(n * p * (1 - p));
  return std::abs(count - n * p) <= k * sd + 1e-9;
}

TEST(ValidateConfig, FourMeterLoopIsFine) {
  LoopConfig cfg;
  cfg.loop_length = 4.0;
  EXPECT_EQ(cfg.round_trip_time(), Duration{13342});
  EXPECT_TRUE(validate_config(cfg, DelayBudget{}).empty());
}

TEST(ValidateConfig, TwoMeterLoopTooShortForRiseTime) {
  LoopConfig cfg;
  cfg.loop_length = 2.0;
  // 2 / 2.998e8 s
  EXPECT_EQ(cfg.round_trip_time(), Duration{6671});
  const auto v = validate_config(cfg, DelayBudget{});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("rise time"), std::string::npos);
}

TEST(ValidateConfig, FiberShorterThanElectronics) {
  DelayBudget budget;
  EXPECT_EQ(budget.required(), from_ns(434.0));
  budget.fiber_delay = from_ns(400.0);
  const auto v = validate_config(LoopConfig{}, budget);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("fiber"), std::string::npos);
  budget.fiber_delay = from_ns(434.0);
  EXPECT_TRUE(validate_config(LoopConfig{}, budget).empty());
}

TEST(ValidateConfig, ReportsEveryViolation) {
  LoopConfig cfg;
  cfg.loop_length = 1.0;
  cfg.drive_pulse_width = from_ns(50.0);
  cfg.pass_survival = 0.0;
  DelayBudget budget;
  budget.fiber_delay = from_ns(100.0);
  EXPECT_EQ(validate_config(cfg, budget).size(), 4u);
}

TEST(DriveFraction, PiecewiseLinearEdges) {
  const PulseWindow w{from_ns(100), from_ns(100)};
  const std::vector<PulseWindow> ws{w};
  const Duration rise = from_ns(10);
  EXPECT_EQ(drive_fraction_at(from_ns(0), ws, rise), 0.0);
  EXPECT_EQ(drive_fraction_at(from_ns(1000), ws, rise), 0.0);
  EXPECT_DOUBLE_EQ(drive_fraction_at(from_ns(105), ws, rise), 0.5);
  EXPECT_EQ(drive_fraction_at(from_ns(150), ws, rise), 1.0);
  EXPECT_DOUBLE_EQ(drive_fraction_at(from_ns(202.5), ws, rise), 0.75);
  EXPECT_EQ(drive_fraction_at(from_ns(210), ws, rise), 0.0);
}

TEST(DriveFraction, WindowsAreOred) {
  const Duration rise = from_ns(10);
  PulseSchedule s{PulseWindow{from_ns(0), from_ns(100)}, PulseWindow{from_ns(105), from_ns(100)}};
  // p1 falling at 0.5, p2 not yet on
  EXPECT_DOUBLE_EQ(drive_fraction_at(from_ns(105), s, rise), 0.5);
  EXPECT_DOUBLE_EQ(drive_fraction_at(from_ns(108), s, rise), 0.3);
  EXPECT_EQ(drive_fraction_at(from_ns(150), s, rise), 1.0);
}

TEST(SchedulePulses, NChosenTwo) {
  const LoopConfig cfg;
  const DelayBudget budget;
  const auto s = schedule_pulses(Duration{0}, budget, cfg, 2);
  ASSERT_TRUE(s.p1 && s.p2);
  const auto timing = LoopTiming::for_herald(Duration{0}, budget, cfg);
  const Duration tau = cfg.round_trip_time();
  EXPECT_GT(s.p1->end(), timing.transit(1));
  EXPECT_LT(s.p1->end(), timing.transit(2));
  EXPECT_LE(s.p2->start + cfg.pockels_rise_time, timing.transit(2));
  EXPECT_LT(s.p2->start + cfg.pockels_rise_time, timing.launch + tau * 2);
  EXPECT_EQ(drive_fraction_at(timing.transit(1), s, cfg.pockels_rise_time), 1.0);
  EXPECT_EQ(drive_fraction_at(timing.transit(2), s, cfg.pockels_rise_time), 1.0);
  EXPECT_GE(s.p1->width, cfg.min_drive_pulse_width);
  EXPECT_GE(s.p2->width, cfg.min_drive_pulse_width);
}

TEST(SchedulePulses, NChosenFiveLeadingEdge) {
  // With the cell at the end of the round trip the fifth transit is at
  // launch + 5 tau, so p2 must lead at or after launch + 4 tau and finish
  // rising before launch + 5 tau.
  LoopConfig cfg;
  cfg.pc_position = 1.0;
  const DelayBudget budget;
  const auto s = schedule_pulses(Duration{0}, budget, cfg, 5);
  const Duration launch = budget.launch_offset();
  const Duration tau{13342};
  EXPECT_GT(s.p2->start, launch + tau * 4);
  EXPECT_LE(s.p2->start + cfg.pockels_rise_time, launch + tau * 5);

  // Default position: same bound relative to the fourth transit.
  const LoopConfig mid;
  const auto t = LoopTiming::for_herald(Duration{0}, budget, mid);
  const auto s2 = schedule_pulses(Duration{0}, budget, mid, 5);
  EXPECT_GE(s2.p2->start, t.transit(4));
  EXPECT_LE(s2.p2->start + mid.pockels_rise_time, t.transit(5));
  for (int k = 2; k <= 4; ++k)
    EXPECT_EQ(drive_fraction_at(t.transit(k), s2, mid.pockels_rise_time), 0.0) << k;
}

TEST(SchedulePulses, P2PlateauCoversSevenTransits) {
  const LoopConfig cfg;
  const DelayBudget budget;
  const int n = 3;
  const auto s = schedule_pulses(Duration{0}, budget, cfg, n);
  const auto t = LoopTiming::for_herald(Duration{0}, budget, cfg);
  int covered = 0;
  for (int k = n; k < n + 20; ++k)
    if (t.transit(k) >= s.p2->start && t.transit(k) <= s.p2->end()) ++covered;
  // 100 ns / 13.34 ns
  EXPECT_EQ(covered, 7);
}

TEST(SchedulePulses, NChosenOneNeedsNoPulses) {
  const auto s = schedule_pulses(Duration{0}, DelayBudget{}, LoopConfig{}, 1);
  EXPECT_FALSE(s.p1);
  EXPECT_FALSE(s.p2);
}

TEST(SchedulePulses, InfeasibleCasesReported) {
  LoopConfig cfg;
  EXPECT_THROW(schedule_pulses(Duration{0}, DelayBudget{}, cfg, 0), ScheduleError);
  EXPECT_THROW(schedule_pulses(Duration{0}, DelayBudget{}, cfg, 51), ScheduleError);
  cfg.loop_length = 2.0;
  EXPECT_THROW(schedule_pulses(Duration{0}, DelayBudget{}, cfg, 3), ScheduleError);
  DelayBudget short_fiber;
  short_fiber.fiber_delay = from_ns(300.0);
  EXPECT_THROW(schedule_pulses(Duration{0}, short_fiber, LoopConfig{}, 3), ScheduleError);
}

TEST(RunSwitchout, LosslessIdealExitsOnCommand) {
  LoopConfig cfg;
  cfg.pass_survival = 1.0;
  const auto fates = run_switchout(cfg, DelayBudget{}, 3, 20000, 11);
  for (const auto& f : fates) {
    ASSERT_EQ(f.outcome, FateOutcome::exited);
    ASSERT_EQ(f.round_trip, 3);
  }
}

TEST(RunSwitchout, ChosenPeakFollowsSurvival) {
  LoopConfig cfg;
  cfg.pass_survival = 0.74;
  for (int n : {2, 4}) {
    const auto counts = exit_counts(run_switchout(cfg, DelayBudget{}, n, 200000, 12 + n));
    EXPECT_EQ(counts.size(), 1u);
    EXPECT_TRUE(within_sigma(static_cast<double>(counts.at(n)), 200000, std::pow(0.74, n), 3.0));
  }
}

TEST(RunSwitchout, SwitchingErrorsProduceSidePeaks) {
  LoopConfig cfg;
  cfg.pass_survival = 0.9;
  cfg.switch_error_prob = 0.1;
  const double e = 0.1, s = 0.9;
  const int n = 3;
  const std::size_t trials = 400000;
  const auto counts = exit_counts(run_switchout(cfg, DelayBudget{}, n, trials, 13));
  // Enumerated by hand: p1 fails -> leaves at 1; p2 fails j times on the
  // plateau -> leaves at n + j.
  const std::map<int, double> oracle{
      {1, e * s},
      {n, (1 - e) * std::pow(s, n) * (1 - e)},
      {n + 1, (1 - e) * std::pow(s, n + 1) * e * (1 - e)},
      {n + 2, (1 - e) * std::pow(s, n + 2) * e * e * (1 - e)},
  };
  for (const auto& [k, p] : oracle) {
    const double c = counts.count(k) ? static_cast<double>(counts.at(k)) : 0.0;
    EXPECT_TRUE(within_sigma(c, static_cast<double>(trials), p, 5.0)) << "round trip " << k;
  }
  EXPECT_EQ(counts.count(2), 0u);
}

TEST(RunSwitchout, RejectsInvalidConfigBeforeRunning) {
  LoopConfig cfg;
  cfg.loop_length = 2.0;
  EXPECT_THROW(run_switchout(cfg, DelayBudget{}, 3, 10, 1), ConfigError);
}

TEST(RunDiagnostic, LosslessDecaysAsHalfToTheN) {
  LoopConfig cfg;
  cfg.hwp = WaveplateSetting::degrees(22.5);
  cfg.pass_survival = 1.0;
  const std::size_t trials = 200000;
  const auto counts = exit_counts(run_diagnostic(cfg, trials, 21));
  for (int k = 1; k <= 6; ++k)
    EXPECT_TRUE(within_sigma(static_cast<double>(counts.at(k)), trials, std::pow(0.5, k), 5.0)) << k;
}

TEST(RunDiagnostic, LossyRatioAndLostFraction) {
  LoopConfig cfg;
  cfg.hwp = WaveplateSetting::degrees(22.5);
  cfg.pass_survival = 0.74;
  const std::size_t trials = 300000;
  const auto fates = run_diagnostic(cfg, trials, 22);
  const auto counts = exit_counts(fates);
  for (int k = 1; k <= 5; ++k)
    EXPECT_TRUE(within_sigma(static_cast<double>(counts.at(k)), trials, std::pow(0.37, k), 5.0)) << k;

  // 1 - sum_{n=1}^{50} 0.37^n
  double exited = 0.0;
  for (int k = 1; k <= 50; ++k) exited += std::pow(0.37, k);
  const double p_lost = 1.0 - exited;
  EXPECT_NEAR(p_lost, 0.413, 1e-3);
  std::size_t lost = 0;
  for (const auto& f : fates) lost += f.outcome == FateOutcome::lost_in_loop;
  EXPECT_TRUE(within_sigma(static_cast<double>(lost), trials, p_lost, 5.0));
}

TEST(PhotonFates, ExitTimeInvariants) {
  LoopConfig cfg;
  cfg.hwp = WaveplateSetting::degrees(22.5);
  const DelayBudget budget;
  const auto fates = run_diagnostic(cfg, 20000, 23, 1, budget);
  const Duration tau = cfg.round_trip_time();
  for (const auto& f : fates) {
    ASSERT_EQ(f.exit_time.has_value(), f.outcome == FateOutcome::exited);
    if (f.exit_time) {
      EXPECT_EQ(*f.exit_time - f.launch_time, tau * f.round_trip);
      EXPECT_EQ((*f.exit_time - f.launch_time) % tau, Duration{0});
    }
  }
}

TEST(PhotonFates, RoundTripCapClassifiesAsLost) {
  LoopConfig cfg;
  cfg.pass_survival = 1.0;
  cfg.max_round_trips = 1;
  cfg.hwp = WaveplateSetting::degrees(45.0);  // V -> H on the first pass
  const auto fates = run_diagnostic(cfg, 100, 24);
  for (const auto& f : fates) EXPECT_EQ(f.outcome, FateOutcome::lost_in_loop);
}

TEST(RunTrials, WorkerCountDoesNotChangeResults) {
  LoopConfig cfg;
  cfg.hwp = WaveplateSetting::degrees(22.5);
  const auto a = run_diagnostic(cfg, 50000, 99, 1);
  const auto b = run_diagnostic(cfg, 50000, 99, 7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].outcome, b[i].outcome);
    ASSERT_EQ(a[i].round_trip, b[i].round_trip);
  }
}

TEST(ScanTurnOnDelay, TracesTheRisingEdge) {
  LoopConfig cfg;
  const std::vector<Duration> delays{from_ns(-5), from_ns(5), from_ns(50)};
  const auto pts = scan_turn_on_delay(cfg, delays, 40000, 31);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].passed, 0u);
  // drive 0.5: sin^2(pi * 0.5 / 2)
  const double mid = std::pow(std::sin(std::numbers::pi * 0.5 / 2), 2);
  EXPECT_TRUE(within_sigma(static_cast<double>(pts[1].passed), 40000, mid, 5.0));
  EXPECT_EQ(pts[2].passed, 40000u);
}

TEST(ScanTurnOnDelay, FullyOnPassFractionReducedBySwitchErrors) {
  LoopConfig cfg;
  cfg.switch_error_prob = 0.05;
  const std::vector<Duration> delays{from_ns(30)};
  const auto pts = scan_turn_on_delay(cfg, delays, 100000, 32);
  EXPECT_TRUE(within_sigma(static_cast<double>(pts[0].passed), 100000, 0.95, 5.0));
}

}  // namespace
}  // namespace pdcsim
