#pragma once

#include <cmath>
#include <numbers>

namespace rulenav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Maps any angle into [0, 2π).
inline double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Maps any angle into (−π, π].
inline double wrap_signed(double a) {
  double r = normalize_angle(a);
  if (r > kPi) r -= kTwoPi;
  return r;
}

// Headings are counter-clockwise from +x, so a positive relative heading is a
// left turn.
inline double bearing(Point2 from, Point2 to) {
  return normalize_angle(std::atan2(to.y - from.y, to.x - from.x));
}

}  // namespace rulenav
