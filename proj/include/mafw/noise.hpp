#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mafw/rng.hpp"

/// Exploration-noise schedules and the concave-decay validity checker.
namespace mafw::noise {

enum class ScheduleKind { kLinear, kCubic };

std::string to_string(ScheduleKind kind);
/// Accepts "linear" or "cubic"; throws std::invalid_argument otherwise.
ScheduleKind parse_kind(const std::string& text);

struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kCubic;
  double rate = 0.02;  // phi for linear, eta for cubic
  double n0 = 1.0;
  double floor = 0.0;

  void validate() const;

  /// Unfloored curve: -rate*t + n0 or -(rate*t)^3 + n0.
  double raw(double t) const;
  /// max(floor, raw(t)).
  double value(double t) const;
  /// First t where the raw curve meets the floor.
  double floor_time() const;
};

struct ValidationReport {
  bool passed = true;
  std::string failed_condition;  // "first-derivative", "second-derivative" or "divided-difference"
  std::optional<double> violating_point;
  double value_at_violation = 0.0;

  std::string describe() const;
};

/// Checks on a uniform grid over the open interval (t_lo, t_hi), using central
/// differences with h = (t_hi - t_lo) / 1e4:
///   (a) f'(t) < 0, (b) f''(t) < 0, and (c) for grid triples x0 < x1 < x2,
///   (f'(x0) - f'(x1)) / |x0 - x1| < (f'(x1) - f'(x2)) / |x1 - x2|.
/// Throws std::invalid_argument when t_lo >= t_hi or grid_points < 3.
ValidationReport validate_schedule(const std::function<double(double)>& fn, double t_lo,
                                   double t_hi, int grid_points = 256);

/// Validates a schedule's raw curve on (0, floor_time()).
ValidationReport validate_schedule(const NoiseSchedule& schedule, int grid_points = 256);

/// i.i.d. Normal(0, scale^2) entries.
std::vector<double> sample_noise(double scale, std::size_t dim, Rng& rng);

}  // namespace mafw::noise
