#include "mafw/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mafw::channel {

void PathLossParams::validate() const {
  if (!(carrier_frequency_hz > 0.0)) throw std::invalid_argument("carrier_frequency must be > 0");
  if (!(reference_distance_m > 0.0)) throw std::invalid_argument("reference_distance must be > 0");
  if (!(path_loss_exponent >= 1.0)) throw std::invalid_argument("path_loss_exponent must be >= 1");
  if (!(shadowing_sigma_db >= 0.0)) throw std::invalid_argument("shadowing_sigma must be >= 0");
}

void RadioParams::validate() const {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double ChannelMatrix::combining_gain() const {
  double total = 0.0;
  for (std::size_t c = 0; c < cols_; ++c) {
    std::complex<double> column_sum{};
    for (std::size_t r = 0; r < rows_; ++r) column_sum += (*this)(r, c);
    total += std::norm(column_sum);
  }
  return total / static_cast<double>(cols_);
}

double free_space_ref_loss(const PathLossParams& params) {
  return 20.0 * std::log10(4.0 * std::numbers::pi * params.reference_distance_m / params.wavelength());
}

double path_loss(const PathLossParams& params, double distance_m, double shadowing_db) {
  if (distance_m < params.reference_distance_m) {
    throw std::domain_error("path_loss: distance " + std::to_string(distance_m) +
                            " m is below the reference distance");
  }
  return free_space_ref_loss(params) +
         10.0 * params.path_loss_exponent * std::log10(distance_m / params.reference_distance_m) +
         shadowing_db - params.tx_gain_dbi - params.rx_gain_dbi;
}

double snr(const RadioParams& radio, double path_loss_db) {
  const double received_w = dbm_to_watts(radio.tx_power_dbm - path_loss_db);
  const double noise_w = dbm_to_watts(radio.noise_psd_dbm_hz) * radio.bandwidth_hz;
  return received_w / noise_w;
}

double shannon_rate(double bandwidth_hz, double snr_linear) {
  return bandwidth_hz * std::log2(1.0 + snr_linear);
}

ChannelMatrix sample_channel_matrix(std::size_t bs_antennas, std::size_t ue_antennas, Rng& rng) {
  if (ue_antennas == 0 || bs_antennas == 0) {
    throw std::invalid_argument("antenna counts must be >= 1");
  }
  if (ue_antennas > bs_antennas) {
    throw std::invalid_argument("UE antennas (" + std::to_string(ue_antennas) +
                                ") exceed BS antennas (" + std::to_string(bs_antennas) + ")");
  }
  ChannelMatrix h(ue_antennas, bs_antennas);
  const double component_sd = std::sqrt(0.5);
  for (std::size_t r = 0; r < ue_antennas; ++r) {
    for (std::size_t c = 0; c < bs_antennas; ++c) {
      const double re = rng.normal(0.0, component_sd);
      const double im = rng.normal(0.0, component_sd);
      h(r, c) = {re, im};
    }
  }
  return h;
}

Position mobility_step(const Position& pos, double speed_mps, double dt_s, Rng& rng) {
  if (speed_mps < 0.0) throw std::invalid_argument("speed must be >= 0");
  const double step = speed_mps * dt_s;
  if (step == 0.0) return pos;

  constexpr int kMaxRetries = 32;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Point next{pos.at.x + step * std::cos(heading), pos.at.y + step * std::sin(heading)};
    if (distance(next, pos.anchor) <= pos.max_radius_m) {
      Position out = pos;
      out.at = next;
      return out;
    }
  }

  // Reflect: head back toward the anchor.
  Position out = pos;
  const double dx = pos.anchor.x - pos.at.x;
  const double dy = pos.anchor.y - pos.at.y;
  const double gap = std::hypot(dx, dy);
  const double ux = gap > 0.0 ? dx / gap : 1.0;
  const double uy = gap > 0.0 ? dy / gap : 0.0;
  out.at = {pos.at.x + step * ux, pos.at.y + step * uy};
  const double r = distance(out.at, pos.anchor);
  if (r > pos.max_radius_m) {
    out.at = {pos.anchor.x + (out.at.x - pos.anchor.x) * pos.max_radius_m / r,
              pos.anchor.y + (out.at.y - pos.anchor.y) * pos.max_radius_m / r};
  }
  return out;
}

LinkState evaluate_link(const PathLossParams& pl, const RadioParams& radio, Point ue, Point ap,
                        std::size_t bs_antennas, std::size_t ue_antennas, Rng& rng) {
  LinkState link;
  link.distance_m = std::max(distance(ue, ap), pl.reference_distance_m);
  link.shadowing_db = pl.shadowing_sigma_db > 0.0 ? rng.normal(0.0, pl.shadowing_sigma_db) : 0.0;
  link.path_loss_db = path_loss(pl, link.distance_m, link.shadowing_db);
  link.snr_linear = snr(radio, link.path_loss_db);
  link.fading_gain = sample_channel_matrix(bs_antennas, ue_antennas, rng).combining_gain();
  link.rate_bps = shannon_rate(radio.bandwidth_hz, link.snr_linear * link.fading_gain);
  return link;
}

}  // namespace mafw::channel
