#pragma once

#include <cstdint>
#include <vector>

#include "mmloc/numerics.hpp"

namespace mmloc {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Rectangular room [0, room_width] x [0, room_depth] with a planar array at
/// bs_position. The array broadside points along +y; columns run along +x and
/// elements are indexed row-major (m = row * array_cols + col).
struct SceneConfig {
  double room_width = 6.0;
  double room_depth = 5.0;
  Point2 bs_position{3.0, 0.5};
  std::size_t array_rows = 4;
  std::size_t array_cols = 8;
  double element_spacing = kSpeedOfLight / 3.7e9 / 2.0;
  double carrier_freq = 3.7e9;
  double bandwidth = 20e6;
  std::size_t n_subcarriers = 64;
  int max_reflection_order = 2;
  double wall_reflection_loss = 6.0;  // dB per bounce
  double snr_db = 20.0;               // +inf disables noise
  std::uint64_t rf_chain_seed = 1;
  std::uint64_t noise_seed = 2;

  std::size_t n_antennas() const { return array_rows * array_cols; }
  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  double subcarrier_spacing() const {
    return bandwidth / static_cast<double>(n_subcarriers);
  }
  /// Baseband offset of subcarrier k from the carrier: -B/2 + k * B / N.
  double subcarrier_offset(std::size_t k) const;

  /// Throws std::invalid_argument on an inconsistent scene.
  void validate() const;
};

/// Parallel x-direction robot passes stacked in +y.
struct TrajectoryPlan {
  std::size_t n_lines = 20;
  double line_spacing = 0.05;  // m
  double line_length = 1.0;    // m
  double speed = 0.1;          // m/s
  double snapshot_rate = 100;  // Hz
  Point2 start{2.5, 2.0};

  double sample_spacing() const { return speed / snapshot_rate; }
  std::size_t samples_per_line() const;
};

struct Ray {
  double delay = 0.0;    // s
  double azimuth = 0.0;  // rad from broadside, positive toward +x
  Complex gain;
  int order = 0;
};

struct Snapshot {
  CMat y;
  Point2 position;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct Dataset {
  SceneConfig scene;
  std::vector<Snapshot> snapshots;

  std::size_t size() const { return snapshots.size(); }
  std::size_t n_antennas() const { return snapshots.empty() ? 0 : snapshots[0].y.rows(); }
  std::size_t n_subcarriers() const { return snapshots.empty() ? 0 : snapshots[0].y.cols(); }
};

/// Serpentine scan: line i runs along +x for even i and -x for odd i, offset
/// i * line_spacing in y. Throws "trajectory leaves room" if any point is outside.
std::vector<Point2> plan_positions(const TrajectoryPlan& plan, const SceneConfig& scene);

/// Image-source enumeration of the rectangular room up to max_reflection_order.
/// The LoS ray comes first.
std::vector<Ray> multipath_rays(const SceneConfig& scene, Point2 ue);

/// Per-RF-chain coefficients drawn from rf_chain_seed: magnitude log-uniform
/// in [-3, +3] dB, phase uniform. Frequency flat.
CVec rf_chain_coefficients(const SceneConfig& scene);

/// Noise-free H (*) Gamma for one position.
CMat synth_channel(const SceneConfig& scene, Point2 ue, std::span<const Complex> gamma);

/// Y = H (*) Gamma + N with per-entry SNR relative to the mean |H (*) Gamma|^2.
CMat synth_snapshot(const SceneConfig& scene, Point2 ue, std::span<const Complex> gamma,
                    Rng& noise_rng);

/// Noise rng of snapshot `index`.
Rng snapshot_noise_rng(const SceneConfig& scene, std::size_t index);

Dataset generate_dataset(const SceneConfig& scene, const TrajectoryPlan& plan);

/// Indices of the leading run of snapshots sharing the first snapshot's y,
/// i.e. the first trajectory line.
std::vector<std::size_t> first_line_indices(const Dataset& dataset);

}  // namespace mmloc
