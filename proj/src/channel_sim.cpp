#include "mmloc/channel_sim.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mmloc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGammaRangeDb = 3.0;

bool inside_room(const SceneConfig& scene, Point2 p) {
  return p.x >= 0.0 && p.x <= scene.room_width && p.y >= 0.0 && p.y <= scene.room_depth;
}

// Coordinate of the image with |index| reflections along one axis of [0, extent].
double image_coordinate(int index, double coord, double extent) {
  const double base = static_cast<double>(index) * extent;
  return (std::abs(index) % 2 == 0) ? base + coord : base + extent - coord;
}

}  // namespace

double SceneConfig::subcarrier_offset(std::size_t k) const {
  return -bandwidth / 2.0 + static_cast<double>(k) * subcarrier_spacing();
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("scene: " + what); };
  if (!(room_width > 0.0 && room_depth > 0.0)) fail("room dimensions must be positive");
  if (!inside_room(*this, bs_position)) fail("bs_position outside room");
  if (array_rows == 0 || array_cols == 0) fail("array must have at least one element");
  if (!(element_spacing > 0.0)) fail("element_spacing must be positive");
  if (!(carrier_freq > 0.0)) fail("carrier_freq must be positive");
  if (!(bandwidth > 0.0)) fail("bandwidth must be positive");
  if (n_subcarriers == 0) fail("n_subcarriers must be at least 1");
  if (max_reflection_order < 0) fail("max_reflection_order must be >= 0");
  if (!(wall_reflection_loss >= 0.0)) fail("wall_reflection_loss must be >= 0");
  if (std::isnan(snr_db)) fail("snr_db is NaN");
}

std::size_t TrajectoryPlan::samples_per_line() const {
  const double step = sample_spacing();
  return static_cast<std::size_t>(std::floor(line_length / step + 1e-9)) + 1;
}

std::vector<Point2> plan_positions(const TrajectoryPlan& plan, const SceneConfig& scene) {
  if (plan.n_lines == 0) throw std::invalid_argument("plan: n_lines must be at least 1");
  if (!(plan.speed > 0.0 && plan.snapshot_rate > 0.0)) {
    throw std::invalid_argument("plan: speed and snapshot_rate must be positive");
  }
  if (!(plan.line_length >= 0.0 && plan.line_spacing >= 0.0)) {
    throw std::invalid_argument("plan: line_length and line_spacing must be >= 0");
  }
  const double step = plan.sample_spacing();
  const std::size_t per_line = plan.samples_per_line();
  std::vector<Point2> out;
  out.reserve(plan.n_lines * per_line);
  for (std::size_t line = 0; line < plan.n_lines; ++line) {
    const double y = plan.start.y + static_cast<double>(line) * plan.line_spacing;
    const bool forward = line % 2 == 0;
    for (std::size_t s = 0; s < per_line; ++s) {
      const std::size_t along = forward ? s : per_line - 1 - s;
      const Point2 p{plan.start.x + static_cast<double>(along) * step, y};
      if (!inside_room(scene, p)) throw std::invalid_argument("trajectory leaves room");
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Ray> multipath_rays(const SceneConfig& scene, Point2 ue) {
  if (!inside_room(scene, ue)) throw std::invalid_argument("ue outside room");
  if (ue == scene.bs_position) throw std::invalid_argument("degenerate geometry");
  const double lambda = scene.wavelength();
  const int order = scene.max_reflection_order;
  std::vector<Ray> rays;
  for (int total = 0; total <= order; ++total) {
    for (int i = -total; i <= total; ++i) {
      const int rest = total - std::abs(i);
      for (int j : {-rest, rest}) {
        const Point2 image{image_coordinate(i, ue.x, scene.room_width),
                           image_coordinate(j, ue.y, scene.room_depth)};
        const double dx = image.x - scene.bs_position.x;
        const double dy = image.y - scene.bs_position.y;
        const double length = std::hypot(dx, dy);
        const double loss = std::pow(10.0, -scene.wall_reflection_loss * total / 20.0);
        Ray ray;
        ray.delay = length / kSpeedOfLight;
        ray.azimuth = std::atan2(dx, dy);
        ray.gain = std::polar(loss / length, -kTwoPi * std::fmod(length / lambda, 1.0));
        ray.order = total;
        rays.push_back(ray);
        if (rest == 0) break;
      }
    }
  }
  return rays;
}

CVec rf_chain_coefficients(const SceneConfig& scene) {
  Rng rng(scene.rf_chain_seed);
  CVec gamma(scene.n_antennas());
  for (auto& g : gamma) {
    const double db = rng.uniform(-kGammaRangeDb, kGammaRangeDb);
    const double phase = rng.uniform(0.0, kTwoPi);
    g = std::polar(std::pow(10.0, db / 20.0), phase);
  }
  return gamma;
}

CMat synth_channel(const SceneConfig& scene, Point2 ue, std::span<const Complex> gamma) {
  const std::size_t m_count = scene.n_antennas();
  const std::size_t n_count = scene.n_subcarriers;
  if (gamma.size() != m_count) throw std::invalid_argument("gamma length != antenna count");
  const double lambda = scene.wavelength();
  const double centre = (static_cast<double>(scene.array_cols) - 1.0) / 2.0;

  CMat h(m_count, n_count);
  CVec freq(n_count);
  CVec steer(scene.array_cols);
  for (const Ray& ray : multipath_rays(scene, ue)) {
    for (std::size_t k = 0; k < n_count; ++k) {
      freq[k] = std::polar(1.0, -kTwoPi * std::fmod(scene.subcarrier_offset(k) * ray.delay, 1.0));
    }
    const double sin_az = std::sin(ray.azimuth);
    for (std::size_t c = 0; c < scene.array_cols; ++c) {
      const double offset = (static_cast<double>(c) - centre) * scene.element_spacing;
      steer[c] = ray.gain * std::polar(1.0, kTwoPi * offset * sin_az / lambda);
    }
    for (std::size_t r = 0; r < scene.array_rows; ++r) {
      for (std::size_t c = 0; c < scene.array_cols; ++c) {
        auto row = h.row(r * scene.array_cols + c);
        const Complex a = steer[c];
        for (std::size_t k = 0; k < n_count; ++k) row[k] += a * freq[k];
      }
    }
  }
  for (std::size_t m = 0; m < m_count; ++m) {
    for (auto& v : h.row(m)) v *= gamma[m];
  }
  return h;
}

CMat synth_snapshot(const SceneConfig& scene, Point2 ue, std::span<const Complex> gamma,
                    Rng& noise_rng) {
  CMat y = synth_channel(scene, ue, gamma);
  if (std::isinf(scene.snr_db) && scene.snr_db > 0) return y;
  const double signal = y.frobenius_sq() / static_cast<double>(y.size());
  const double sigma = std::sqrt(signal / std::pow(10.0, scene.snr_db / 10.0) / 2.0);
  for (auto& v : y.data()) {
    const double re = noise_rng.normal();
    const double im = noise_rng.normal();
    v += Complex(sigma * re, sigma * im);
  }
  return y;
}

Rng snapshot_noise_rng(const SceneConfig& scene, std::size_t index) {
  return Rng(derive_seed(scene.noise_seed, index));
}

Dataset generate_dataset(const SceneConfig& scene, const TrajectoryPlan& plan) {
  scene.validate();
  const auto positions = plan_positions(plan, scene);
  const CVec gamma = rf_chain_coefficients(scene);
  Dataset out;
  out.scene = scene;
  out.snapshots.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    Rng rng = snapshot_noise_rng(scene, i);
    out.snapshots.push_back({synth_snapshot(scene, positions[i], gamma, rng), positions[i]});
  }
  return out;
}

std::vector<std::size_t> first_line_indices(const Dataset& dataset) {
  std::vector<std::size_t> out;
  if (dataset.snapshots.empty()) return out;
  const double y0 = dataset.snapshots[0].position.y;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (std::abs(dataset.snapshots[i].position.y - y0) > 1e-9) break;
    out.push_back(i);
  }
  return out;
}

}  // namespace mmloc
