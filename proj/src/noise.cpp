#include "mafw/noise.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mafw::noise {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::kLinear ? "linear" : "cubic"; }

ScheduleKind parse_kind(const std::string& text) {
  if (text == "linear") return ScheduleKind::kLinear;
  if (text == "cubic") return ScheduleKind::kCubic;
  throw std::invalid_argument("unknown noise schedule '" + text + "' (expected linear or cubic)");
}

void NoiseSchedule::validate() const {
  if (!(n0 > 0.0)) throw std::invalid_argument("noise: n0 must be > 0");
  if (!(floor >= 0.0)) throw std::invalid_argument("noise: floor must be >= 0");
  if (!(rate > 0.0)) throw std::invalid_argument("noise: rate must be > 0");
}

double NoiseSchedule::raw(double t) const {
  if (kind == ScheduleKind::kLinear) return -rate * t + n0;
  const double x = rate * t;
  return -(x * x * x) + n0;
}

double NoiseSchedule::value(double t) const { return std::max(floor, raw(t)); }

double NoiseSchedule::floor_time() const {
  const double drop = n0 - floor;
  if (drop <= 0.0) return 0.0;
  if (kind == ScheduleKind::kLinear) return drop / rate;
  return std::cbrt(drop) / rate;
}

std::string ValidationReport::describe() const {
  if (passed) return "PASS";
  std::ostringstream os;
  os << "FAIL (" << failed_condition << " at t=" << *violating_point << ", value "
     << value_at_violation << ")";
  return os.str();
}

ValidationReport validate_schedule(const std::function<double(double)>& fn, double t_lo,
                                   double t_hi, int grid_points) {
  if (!(t_lo < t_hi)) throw std::invalid_argument("validate_schedule: degenerate domain");
  if (grid_points < 3) throw std::invalid_argument("validate_schedule: need at least 3 grid points");

  const double h = (t_hi - t_lo) / 1e4;
  // Interior grid, kept at least h away from both endpoints.
  std::vector<double> ts(grid_points);
  const double span = (t_hi - t_lo) - 2.0 * h;
  for (int i = 0; i < grid_points; ++i) {
    ts[i] = t_lo + h + span * (static_cast<double>(i) + 0.5) / static_cast<double>(grid_points);
  }

  auto d1 = [&](double t) { return (fn(t + h) - fn(t - h)) / (2.0 * h); };
  auto d2 = [&](double t) { return (fn(t + h) - 2.0 * fn(t) + fn(t - h)) / (h * h); };

  ValidationReport report;
  auto fail = [&](const char* what, double t, double v) {
    report.passed = false;
    report.failed_condition = what;
    report.violating_point = t;
    report.value_at_violation = v;
    return report;
  };

  std::vector<double> slope(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    slope[i] = d1(ts[i]);
    if (!(slope[i] < 0.0)) return fail("first-derivative", ts[i], slope[i]);
  }
  for (int i = 0; i < grid_points; ++i) {
    const double c = d2(ts[i]);
    if (!(c < 0.0)) return fail("second-derivative", ts[i], c);
  }
  // Consecutive triples plus spread-out triples at strides up to a quarter grid.
  for (int stride = 1; stride <= grid_points / 4; stride *= 2) {
    for (int i = 0; i + 2 * stride < grid_points; ++i) {
      const int j = i + stride;
      const int k = i + 2 * stride;
      const double left = (slope[i] - slope[j]) / std::abs(ts[i] - ts[j]);
      const double right = (slope[j] - slope[k]) / std::abs(ts[j] - ts[k]);
      if (!(left < right)) return fail("divided-difference", ts[j], right - left);
    }
  }
  return report;
}

ValidationReport validate_schedule(const NoiseSchedule& schedule, int grid_points) {
  schedule.validate();
  const double t_hi = schedule.floor_time();
  return validate_schedule([&](double t) { return schedule.raw(t); }, 0.0, t_hi, grid_points);
}

std::vector<double> sample_noise(double scale, std::size_t dim, Rng& rng) {
  if (scale < 0.0) throw std::invalid_argument("sample_noise: negative scale");
  std::vector<double> out(dim, 0.0);
  if (scale == 0.0) return out;
  for (double& v : out) v = rng.normal(0.0, scale);
  return out;
}

}  // namespace mafw::noise
