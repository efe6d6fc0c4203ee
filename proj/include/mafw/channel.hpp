#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mafw/rng.hpp"

/// Radio propagation: close-in path loss, SNR, Shannon rate, Rayleigh
/// channel matrices and the bounded random-walk mobility model.
namespace mafw::channel {

inline constexpr double kSpeedOfLight = 299792458.0;

struct PathLossParams {
  double carrier_frequency_hz = 5e9;
  double reference_distance_m = 1.0;
  double path_loss_exponent = 3.0;
  double shadowing_sigma_db = 0.0;
  double tx_gain_dbi = 3.0;
  double rx_gain_dbi = 3.0;

  /// Throws std::invalid_argument naming the first violated bound.
  void validate() const;
  double wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }
};

struct RadioParams {
  double tx_power_dbm = 20.0;
  double noise_psd_dbm_hz = -174.0;
  double bandwidth_hz = 80e6;

  void validate() const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Position {
  Point at;
  Point anchor;
  double max_radius_m = 20.0;
};

/// Rows are UE antennas, columns are BS antennas.
class ChannelMatrix {
 public:
  ChannelMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::complex<double>& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  const std::complex<double>& operator()(std::size_t r, std::size_t c) const {
    return entries_[r * cols_ + c];
  }
  const std::vector<std::complex<double>>& entries() const { return entries_; }

  /// ||C H||^2 / cols with C the all-ones stream combiner; mean equals rows()
  /// for unit-variance entries.
  double combining_gain() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::complex<double>> entries_;
};

/// Per-agent link snapshot for one slot.
struct LinkState {
  double distance_m = 0.0;
  double shadowing_db = 0.0;
  double path_loss_db = 0.0;
  double snr_linear = 0.0;    // large-scale SNR, observed by the agent
  double fading_gain = 1.0;   // small-scale combining gain from H
  double rate_bps = 0.0;      // Shannon rate on snr_linear * fading_gain
};

double free_space_ref_loss(const PathLossParams& params);

/// Throws std::domain_error when distance < reference distance.
double path_loss(const PathLossParams& params, double distance_m, double shadowing_db);

double snr(const RadioParams& radio, double path_loss_db);

double shannon_rate(double bandwidth_hz, double snr_linear);

/// Throws std::invalid_argument when ue_antennas > bs_antennas or either is 0.
ChannelMatrix sample_channel_matrix(std::size_t bs_antennas, std::size_t ue_antennas, Rng& rng);

Position mobility_step(const Position& pos, double speed_mps, double dt_s, Rng& rng);

/// Distances below the reference distance are clamped up to it.
LinkState evaluate_link(const PathLossParams& pl, const RadioParams& radio, Point ue, Point ap,
                        std::size_t bs_antennas, std::size_t ue_antennas, Rng& rng);

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace mafw::channel
