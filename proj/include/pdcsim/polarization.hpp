#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace pdcsim {

using Complex = std::complex<double>;

/// Jones vector of a single photon in the horizontal/vertical basis of the
/// loop's polarizing beamsplitter. Always kept at unit norm; global phase is
/// not physical here and comparisons should go through `same_state`.
struct PolarizationState {
  Complex h{0.0, 0.0};
  Complex v{1.0, 0.0};

  static constexpr PolarizationState horizontal() { return {{1.0, 0.0}, {0.0, 0.0}}; }
  static constexpr PolarizationState vertical() { return {{0.0, 0.0}, {1.0, 0.0}}; }

  /// Linear polarization at `angle` radians measured from vertical.
  static PolarizationState linear(double angle) {
    return {{std::sin(angle), 0.0}, {std::cos(angle), 0.0}};
  }

  double norm_squared() const { return std::norm(h) + std::norm(v); }

  PolarizationState normalized() const {
    const double n = std::sqrt(norm_squared());
    if (!(n > 0.0)) throw std::invalid_argument("zero Jones vector");
    return {h / n, v / n};
  }
};

/// True when `a` and `b` describe the same ray, i.e. |<a|b>| = 1.
inline bool same_state(const PolarizationState& a, const PolarizationState& b,
                       double tol = 1e-12) {
  const Complex overlap = std::conj(a.h) * b.h + std::conj(a.v) * b.v;
  return std::abs(1.0 - std::abs(overlap)) <= tol;
}

struct WaveplateSetting {
  double fast_axis_angle = 0.0;  // radians from vertical, in [0, pi)

  static WaveplateSetting degrees(double deg) {
    return {deg * std::numbers::pi / 180.0};
  }

  bool valid() const {
    return fast_axis_angle >= 0.0 && fast_axis_angle < std::numbers::pi;
  }
};

namespace detail {

// Linear retarder with fast axis at `axis` (from vertical) and retardance
// `delta`. Fast-axis component picks up exp(-i delta/2), slow axis exp(+i delta/2).
inline PolarizationState retard(const PolarizationState& s, double axis, double delta) {
  const double uh = std::sin(axis), uv = std::cos(axis);    // fast axis
  const double wh = std::cos(axis), wv = -std::sin(axis);   // slow axis
  const Complex fast = std::polar(1.0, -delta / 2.0);
  const Complex slow = std::polar(1.0, delta / 2.0);
  const Complex cu = uh * s.h + uv * s.v;
  const Complex cw = wh * s.h + wv * s.v;
  const PolarizationState out{fast * cu * uh + slow * cw * wh,
                              fast * cu * uv + slow * cw * wv};
  return out.normalized();
}

}  // namespace detail

/// Half-wave plate: reflects linear polarization about the fast axis, so a
/// linear state at alpha leaves at 2*theta - alpha.
inline PolarizationState hwp_apply(const PolarizationState& state, WaveplateSetting wp) {
  return detail::retard(state, wp.fast_axis_angle, std::numbers::pi);
}

/// Pockels cell with axes at 45 degrees from vertical. Retardance grows
/// linearly with drive: 0 is off (identity), 1 is the half-wave voltage (V<->H).
inline PolarizationState pockels_apply(const PolarizationState& state, double drive_fraction) {
  if (drive_fraction <= 0.0) return state;
  const double d = drive_fraction > 1.0 ? 1.0 : drive_fraction;
  return detail::retard(state, std::numbers::pi / 4.0, std::numbers::pi * d);
}

struct PbsProbabilities {
  double reflect;   // vertical, leaves the loop
  double transmit;  // horizontal, stays in the loop
};

inline PbsProbabilities pbs_probabilities(const PolarizationState& state) {
  const double r = std::norm(state.v);
  const double t = std::norm(state.h);
  const double sum = r + t;
  return {r / sum, t / sum};
}

}  // namespace pdcsim
