#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmloc/fingerprint.hpp"
#include "mmloc/numerics.hpp"

namespace mmloc {

struct LayerDims {
  std::size_t in = 0;
  std::size_t out = 0;

  friend bool operator==(const LayerDims&, const LayerDims&) = default;
};

struct MlpSpec {
  std::vector<LayerDims> layers;
  double leaky_slope = 0.01;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  /// Throws std::invalid_argument unless layers chain, end in 2 outputs and
  /// the slope is in (0, 1).
  void validate() const;
};

/// Fully connected stack following the three network columns: the raw
/// transfer-function net, the covariance net and the truncated-CIR net.
/// Halved and quartered widths are rounded up to a multiple of 4 (minimum 4).
MlpSpec build_spec(FeatureKind kind, std::size_t m, std::size_t n, std::size_t l_bins);

/// Sum over layers of in * out + out.
std::size_t param_count(const MlpSpec& spec);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

class MlpModel {
 public:
  /// Glorot-uniform weights in +-sqrt(6 / (in + out)) from spec.seed, zero biases.
  explicit MlpModel(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Mutable access invalidates forward caches taken before the call.
  std::vector<DenseLayer>& mutable_layers();

  std::uint64_t id() const { return id_; }
  std::uint64_t version() const { return version_; }

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

/// Layer inputs and pre-activations of one forward call (columns are samples).
struct ForwardCache {
  std::uint64_t model_id = 0;
  std::uint64_t model_version = 0;
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

struct ForwardResult {
  Point2 y;
  ForwardCache cache;
};

/// Leaky ReLU after every layer except the last, which is linear.
ForwardResult forward(const MlpModel& model, std::span<const double> x);

/// Batched forward over the columns of x (input_dim x batch). Returns 2 x batch.
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x,
                              ForwardCache* cache = nullptr);

/// Gradients of the loss w.r.t. every parameter given dLoss/dOutput
/// (2 x batch, matching the cached forward call).
Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& grad_out);
Gradients backward(const MlpModel& model, const ForwardCache& cache, Point2 grad_out);

/// Mean over the batch of the squared Euclidean distance.
double mse_loss(std::span<const Point2> pred, std::span<const Point2> truth);

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  double lr0 = 1e-4;
  double lr_decay = 0.2;
  std::size_t lr_decay_every = 10;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

/// lr0 * (1 - lr_decay)^floor(epoch / lr_decay_every).
double learning_rate(const TrainConfig& config, std::size_t epoch);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // mean training loss per epoch
};

/// Mini-batch training on features[subset[i]] -> labels[subset[i]] (all rows
/// when subset is empty). Deterministic for fixed seeds and data.
TrainResult train(const MlpSpec& spec, const TrainConfig& config, std::span<const RVec> features,
                  std::span<const Point2> labels, std::span<const std::size_t> subset = {});

std::vector<Point2> predict(const MlpModel& model, std::span<const RVec> features,
                            std::span<const std::size_t> subset = {});

/// Binary layout, little-endian: "MLPW", u16 version, u32 layer count,
/// (u32 in, u32 out) per layer, f64 leaky slope, then per layer W row-major
/// followed by b, all f64.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace mmloc
