#include <gtest/gtest.h>

#include <cmath>

#include "pdcsim/loqc.hpp"

namespace pdcsim {
namespace {

AncillaBankConfig bank(int n, double q, double s, std::int64_t m) {
  AncillaBankConfig c;
  c.n_sources = n;
  c.load_prob = q;
  c.pass_survival = s;
  c.round_trip = Duration{13342};
  c.rep_period = Duration{13342};
  c.gate_time = c.rep_period * m;
  return c;
}

double mc_success(const AncillaBankConfig& c, std::size_t trials, std::uint64_t seed) {
  std::size_t ok = 0;
  for (const auto& o : simulate_bank(c, trials, seed)) ok += o.all_alive_at_gate;
  return static_cast<double>(ok) / static_cast<double>(trials);
}

// Brute-force enumeration over each source's load pulse, independent of the
// closed form: sum over (k_1..k_N) of prod q(1-q)^(k_i-1) s^(M-k_i).
double enumerate_success(int n, double q, double s, int m) {
  std::vector<int> k(static_cast<std::size_t>(n), 1);
  double total = 0.0;
  while (true) {
    double p = 1.0;
    for (int ki : k) {
      for (int j = 1; j < ki; ++j) p *= 1 - q;
      p *= q;
      for (int j = 0; j < m - ki; ++j) p *= s;
    }
    total += p;
    std::size_t i = 0;
    while (i < k.size() && ++k[i] > m) k[i++] = 1;
    if (i == k.size()) break;
  }
  return total;
}

TEST(SuccessExact, DegenerateCases) {
  // q = 1: load at pulse 1, survive M-1 periods
  EXPECT_NEAR(success_probability_exact(bank(3, 1.0, 0.9, 5)), std::pow(0.9, 3 * 4), 1e-12);
  // s = 1: (1 - (1-q)^M)^N
  EXPECT_NEAR(success_probability_exact(bank(4, 0.2, 1.0, 7)), std::pow(1 - std::pow(0.8, 7), 4),
              1e-12);
  EXPECT_NEAR(success_probability_exact(bank(1, 1.0, 1.0, 1)), 1.0, 1e-12);
}

TEST(SuccessExact, MatchesBruteForceEnumeration) {
  for (int n : {1, 2, 3})
    for (double q : {0.1, 0.5})
      for (double s : {0.74, 0.95})
        for (int m : {1, 4, 9})
          EXPECT_NEAR(success_probability_exact(bank(n, q, s, m)), enumerate_success(n, q, s, m),
                      1e-12);
}

TEST(SuccessExact, RoundsPerPeriod) {
  AncillaBankConfig c = bank(2, 0.3, 0.9, 6);
  c.rep_period = c.round_trip * 3;
  c.gate_time = c.rep_period * 6;
  // survival per pump period is s^3
  EXPECT_NEAR(success_probability_exact(c), enumerate_success(2, 0.3, std::pow(0.9, 3), 6), 1e-12);
}

TEST(SuccessExact, FalseTriggersLowerSuccess) {
  AncillaBankConfig c = bank(2, 0.2, 0.9, 20);
  const double clean = success_probability_exact(c);
  c.false_trigger_prob = 0.05;
  const double noisy = success_probability_exact(c);
  EXPECT_LT(noisy, clean);
  EXPECT_LE(std::abs(mc_success(c, 100000, 3) - noisy), 5 * std::sqrt(noisy * (1 - noisy) / 100000));
}

TEST(SuccessExact, Monotonicity) {
  const double qs[] = {0.05, 0.1, 0.3, 0.6, 1.0};
  const double ss[] = {0.5, 0.74, 0.9, 1.0};
  const int ns[] = {1, 2, 4, 8};
  const int ms[] = {1, 3, 10, 40};
  // In q only for lossless loops; see LoadingEarlyCanHurt.
  for (int n : ns)
    for (int m : ms)
      for (std::size_t i = 1; i < std::size(qs); ++i) {
        EXPECT_LE(success_probability_exact(bank(n, qs[i - 1], 1.0, m)),
                  success_probability_exact(bank(n, qs[i], 1.0, m)) + 1e-15);
      }
  for (int n : ns)
    for (int m : ms)
      for (double q : qs)
        for (std::size_t i = 1; i < std::size(ss); ++i)
          EXPECT_LE(success_probability_exact(bank(n, q, ss[i - 1], m)),
                    success_probability_exact(bank(n, q, ss[i], m)) + 1e-15);
  for (int n : ns)
    for (double q : qs)
      for (std::size_t i = 1; i < std::size(ms); ++i)
        EXPECT_LE(success_probability_exact(bank(n, q, 1.0, ms[i - 1])),
                  success_probability_exact(bank(n, q, 1.0, ms[i])) + 1e-15);
  for (int m : ms)
    for (double q : qs)
      for (std::size_t i = 1; i < std::size(ns); ++i)
        EXPECT_GE(success_probability_exact(bank(ns[i - 1], q, 0.74, m)),
                  success_probability_exact(bank(ns[i], q, 0.74, m)) - 1e-15);
}

TEST(SuccessExact, LoadingEarlyCanHurt) {
  // With a lossy loop a higher load probability stores the photon for longer:
  // q = 1 loads at pulse 1 and must survive M - 1 periods.
  const double slow = success_probability_exact(bank(1, 0.6, 0.5, 3));
  const double fast = success_probability_exact(bank(1, 1.0, 0.5, 3));
  EXPECT_NEAR(slow, 0.6 * 0.25 + 0.24 * 0.5 + 0.096, 1e-12);
  EXPECT_NEAR(fast, 0.25, 1e-12);
  EXPECT_GT(slow, fast);
}

TEST(SimulateBank, IdealSourcesAlwaysSucceed) {
  for (const auto& o : simulate_bank(bank(5, 1.0, 1.0, 10), 1000, 1)) {
    EXPECT_TRUE(o.all_alive_at_gate);
    for (const auto& t : o.load_time) EXPECT_EQ(t, Duration{13342});
  }
}

TEST(SimulateBank, SingleSourceLoadingFollowsGeometricCdf) {
  const auto c = bank(1, 0.05, 1.0, 30);
  const double p = 1 - std::pow(0.95, 30);
  const std::size_t trials = 100000;
  std::size_t loaded = 0;
  for (const auto& o : simulate_bank(c, trials, 2)) loaded += o.all_loaded_by_gate;
  EXPECT_LE(std::abs(static_cast<double>(loaded) / trials - p), 5 * std::sqrt(p * (1 - p) / trials));
}

TEST(SimulateBank, FourSourcesMatchProductForm) {
  const auto c = bank(4, 0.1, 0.74, 100);
  const double p = success_probability_exact(c);
  EXPECT_NEAR(p, enumerate_success(1, 0.1, 0.74, 100) * enumerate_success(1, 0.1, 0.74, 100) *
                     enumerate_success(1, 0.1, 0.74, 100) * enumerate_success(1, 0.1, 0.74, 100),
              1e-12);
  const std::size_t trials = 200000;
  EXPECT_LE(std::abs(mc_success(c, trials, 4) - p), 5 * std::sqrt(p * (1 - p) / trials));
}

TEST(SimulateBank, AliveImpliesLoaded) {
  AncillaBankConfig c = bank(3, 0.2, 0.8, 12);
  c.false_trigger_prob = 0.1;
  for (const auto& o : simulate_bank(c, 20000, 5)) {
    if (o.all_alive_at_gate) {
      EXPECT_TRUE(o.all_loaded_by_gate);
    }
    for (const auto& t : o.load_time) {
      if (t) {
        EXPECT_LE(*t, c.gate_time);
      }
    }
  }
}

TEST(BankConfig, Validation) {
  EXPECT_TRUE(bank(4, 0.1, 0.74, 10).violations().empty());
  EXPECT_FALSE(bank(0, 0.1, 0.74, 10).violations().empty());
  EXPECT_FALSE(bank(1, 0.0, 0.74, 10).violations().empty());
  AncillaBankConfig c = bank(1, 0.1, 0.74, 10);
  c.gate_time += Duration{1};
  EXPECT_FALSE(c.violations().empty());
  c = bank(1, 0.1, 0.74, 10);
  c.rep_period += Duration{5};
  c.gate_time = c.rep_period * 10;
  EXPECT_FALSE(c.violations().empty());
  EXPECT_THROW(success_probability_exact(bank(1, 0.1, 0.74, 0)), ConfigError);
}

TEST(SuccessCurve, RowsCarryExactAndMonteCarlo) {
  const std::vector<std::int64_t> gates{1, 10, 40};
  const auto rows = success_curve(bank(2, 0.2, 0.9, 1), gates, 20000, 6);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_LE(std::abs(r.monte_carlo - r.exact), 5 * std::sqrt(r.exact * (1 - r.exact) / 20000) + 1e-12);
    EXPECT_GE(r.stderr_mc, 0.0);
  }
}

}  // namespace
}  // namespace pdcsim
