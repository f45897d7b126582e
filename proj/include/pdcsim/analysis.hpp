#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdcsim/switch_loop.hpp"
#include "pdcsim/units.hpp"

namespace pdcsim {

/// Coincidence counts against (D_b arrival - D_a detection), bins of
/// `bin_width` starting at `origin`.
struct Histogram {
  Duration bin_width{1000};
  Duration origin{0};
  std::vector<std::uint64_t> counts;
  double duration_label = 0.0;  // simulated acquisition, seconds

  Duration bin_start(std::size_t i) const {
    return origin + bin_width * static_cast<std::int64_t>(i);
  }
  Duration span() const { return bin_width * static_cast<std::int64_t>(counts.size()); }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }

  /// Bin-wise sum; shards must share geometry. Order of merging is irrelevant.
  Histogram& merge(const Histogram& other) {
    if (other.bin_width != bin_width || other.origin != origin ||
        other.counts.size() != counts.size())
      throw std::invalid_argument("histogram merge: geometry mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    duration_label += other.duration_label;
    return *this;
  }
};

struct HistogramWindow {
  Duration origin{0};
  Duration span{0};
  Duration bin_width{1000};
};

namespace detail {

inline Histogram empty_histogram(const HistogramWindow& w, Duration round_trip) {
  if (w.bin_width.count() <= 0) throw std::invalid_argument("histogram: bin width must be positive");
  if (w.bin_width * 2 >= round_trip)
    throw std::invalid_argument("histogram: bin width aliases round-trip peaks");
  if (w.span.count() <= 0) throw std::invalid_argument("histogram: window span must be positive");
  Histogram h;
  h.bin_width = w.bin_width;
  h.origin = w.origin;
  h.counts.assign(static_cast<std::size_t>((w.span.count() + w.bin_width.count() - 1) /
                                           w.bin_width.count()),
                  0);
  return h;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

inline void add_count(Histogram& h, Duration dt) {
  if (dt < h.origin) return;
  const auto bin = static_cast<std::size_t>((dt - h.origin) / h.bin_width);
  if (bin < h.counts.size()) ++h.counts[bin];
}

}  // namespace detail

/// Bins exit_time - herald_time for every exited fate; herald_times[i]
/// belongs to fates[i].
inline Histogram build_histogram(std::span<const PhotonFate> fates,
                                 std::span<const Duration> herald_times,
                                 const HistogramWindow& window, Duration round_trip) {
  if (fates.size() != herald_times.size())
    throw std::invalid_argument("histogram: one herald time per fate required");
  Histogram h = detail::empty_histogram(window, round_trip);
  for (std::size_t i = 0; i < fates.size(); ++i)
    if (fates[i].exit_time) detail::add_count(h, *fates[i].exit_time - herald_times[i]);
  return h;
}

/// Same, with every fate heralded at `herald_time`.
inline Histogram build_histogram(std::span<const PhotonFate> fates, Duration herald_time,
                                 const HistogramWindow& window, Duration round_trip) {
  Histogram h = detail::empty_histogram(window, round_trip);
  for (const auto& f : fates)
    if (f.exit_time) detail::add_count(h, *f.exit_time - herald_time);
  return h;
}

struct PeakAreas {
  std::vector<std::uint64_t> areas;  // areas[i] is round trip i + 1
  std::uint64_t outside = 0;
};

/// Sums the counts whose bin center lies within [-half, +half) of
/// first_peak + n * round_trip, n = 1..n_max. Default half-window is half a
/// round trip, so adjacent windows tile without overlap.
inline PeakAreas integrate_peaks(const Histogram& h, Duration round_trip, Duration peak_offset,
                                 int n_max, std::optional<Duration> half_window = {}) {
  if (n_max < 1) throw std::invalid_argument("integrate_peaks: n_max must be at least 1");
  const Duration half = half_window.value_or(round_trip / 2);
  if (half.count() <= 0) throw std::invalid_argument("integrate_peaks: empty window");
  if (half * 2 > round_trip) throw std::invalid_argument("integrate_peaks: windows overlap");

  PeakAreas out;
  out.areas.assign(static_cast<std::size_t>(n_max), 0);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] == 0) continue;
    // Twice the bin center, in ps, keeps the arithmetic integral.
    const std::int64_t c2 = 2 * h.bin_start(i).count() + h.bin_width.count();
    const std::int64_t rel2 = c2 - 2 * peak_offset.count();
    const std::int64_t tau2 = 2 * round_trip.count();
    const std::int64_t n = detail::floor_div(rel2 + round_trip.count(), tau2);  // nearest peak
    const std::int64_t off2 = rel2 - n * tau2;
    if (n >= 1 && n <= n_max && off2 >= -2 * half.count() && off2 < 2 * half.count())
      out.areas[static_cast<std::size_t>(n - 1)] += h.counts[i];
    else
      out.outside += h.counts[i];
  }
  return out;
}

/// Start of the fullest bin inside each round-trip window (empty windows give
/// nullopt).
inline std::vector<std::optional<Duration>> peak_positions(const Histogram& h, Duration round_trip,
                                                           Duration peak_offset, int n_max) {
  std::vector<std::optional<Duration>> out(static_cast<std::size_t>(n_max));
  std::vector<std::uint64_t> best(static_cast<std::size_t>(n_max), 0);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const Duration center = h.bin_start(i) + h.bin_width / 2;
    const double rel = static_cast<double>((center - peak_offset).count()) /
                       static_cast<double>(round_trip.count());
    const auto n = static_cast<std::int64_t>(std::floor(rel + 0.5));
    if (n < 1 || n > n_max) continue;
    auto idx = static_cast<std::size_t>(n - 1);
    if (h.counts[i] > best[idx]) {
      best[idx] = h.counts[i];
      out[idx] = h.bin_start(i);
    }
  }
  return out;
}

/// Areas fall as (1/base)^n.
struct DecayFit {
  double base = 0.0;
  double r2 = 0.0;
  double slope = 0.0;      // of ln(area) vs n
  double intercept = 0.0;
  std::vector<double> areas;
  std::vector<int> excluded;  // round trips dropped for nonpositive area
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least squares on ln(area_n) against n, n = first_round_trip, ... Uniform
/// weights by default; `poisson_weights` weights each point by its count,
/// the inverse variance of ln(count).
inline DecayFit fit_decay(std::span<const double> areas, bool poisson_weights = false,
                          int first_round_trip = 1) {
  DecayFit fit;
  fit.areas.assign(areas.begin(), areas.end());
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const int n = first_round_trip + static_cast<int>(i);
    if (!(areas[i] > 0.0)) {
      fit.excluded.push_back(n);
      continue;
    }
    x.push_back(n);
    y.push_back(std::log(areas[i]));
    w.push_back(poisson_weights ? areas[i] : 1.0);
  }
  if (x.size() < 3) throw FitError("fit_decay: fewer than 3 usable peaks");

  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.base = std::exp(-fit.slope);
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += w[i] * r * r;
  }
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  if (!(fit.base > 1.0)) throw FitError("fit_decay: areas do not decay");
  return fit;
}

inline DecayFit fit_decay(const PeakAreas& peaks, bool poisson_weights = false) {
  std::vector<double> a(peaks.areas.begin(), peaks.areas.end());
  return fit_decay(a, poisson_weights);
}

/// Width of a linear drive edge seen through crossed polarizers. Pass
/// fractions are mapped back to drive (f = sin^2(pi d / 2)); the width is the
/// 10%-90% drive interval scaled to the full ramp.
inline double fit_transition_width(std::span<const double> delays_ns,
                                   std::span<const double> pass_fraction) {
  if (delays_ns.size() != pass_fraction.size() || delays_ns.size() < 2)
    throw FitError("fit_transition_width: need matching delay/fraction series");
  std::vector<double> drive(pass_fraction.size());
  for (std::size_t i = 0; i < drive.size(); ++i)
    drive[i] = 2.0 / std::numbers::pi * std::asin(std::sqrt(std::clamp(pass_fraction[i], 0.0, 1.0)));

  auto crossing = [&](double level) -> double {
    for (std::size_t i = 1; i < drive.size(); ++i) {
      if (drive[i - 1] < level && drive[i] >= level) {
        const double f = (level - drive[i - 1]) / (drive[i] - drive[i - 1]);
        return delays_ns[i - 1] + f * (delays_ns[i] - delays_ns[i - 1]);
      }
    }
    throw FitError("fit_transition_width: edge not resolved by the scan");
  };
  return (crossing(0.9) - crossing(0.1)) / 0.8;
}

// ---- output formats -------------------------------------------------------

/// `bin_start_ns,count` with a header line.
inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_start_ns,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const auto ps = h.bin_start(i).count();
    const auto whole = ps / 1000, frac = std::abs(ps % 1000);
    os << (ps < 0 && whole == 0 ? "-" : "") << whole << '.' << std::setw(3) << std::setfill('0')
       << frac << std::setfill(' ') << ',' << h.counts[i] << '\n';
  }
}

inline nlohmann::json fit_record(const DecayFit& fit) {
  return {{"b", fit.base}, {"r2", fit.r2}, {"areas", fit.areas}};
}

}  // namespace pdcsim
