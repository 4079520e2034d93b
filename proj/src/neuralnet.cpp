#include "mmloc/neuralnet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"

namespace mmloc {

namespace {

constexpr char kModelMagic[4] = {'M', 'L', 'P', 'W'};
constexpr std::uint16_t kModelVersion = 1;
constexpr std::size_t kPredictChunk = 256;

std::atomic<std::uint64_t> next_model_id{1};

std::size_t round_up4(std::size_t v) { return std::max<std::size_t>(4, (v + 3) / 4 * 4); }

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

Eigen::MatrixXd gather(std::span<const RVec> features, std::span<const std::size_t> rows,
                       std::size_t dim) {
  Eigen::MatrixXd x(dim, rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const RVec& f = features[rows[c]];
    if (f.size() != dim) throw std::invalid_argument("feature length does not match input layer");
    x.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(f.data(), dim);
  }
  return x;
}

std::vector<std::size_t> resolve_subset(std::span<const std::size_t> subset, std::size_t total) {
  if (!subset.empty()) return {subset.begin(), subset.end()};
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

}  // namespace

void MlpSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("MlpSpec: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].in == 0 || layers[i].out == 0) {
      throw std::invalid_argument("MlpSpec: zero-width layer " + std::to_string(i));
    }
    if (i + 1 < layers.size() && layers[i].out != layers[i + 1].in) {
      throw std::invalid_argument("MlpSpec: layer " + std::to_string(i) +
                                  " does not chain into the next");
    }
  }
  if (layers.back().out != 2) throw std::invalid_argument("MlpSpec: final layer must output 2");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw std::invalid_argument("MlpSpec: leaky_slope must be in (0, 1)");
  }
}

MlpSpec build_spec(FeatureKind kind, std::size_t m, std::size_t n, std::size_t l_bins) {
  if (m == 0 || n == 0 || l_bins == 0) throw std::invalid_argument("build_spec: zero dimension");
  std::vector<std::size_t> widths;
  switch (kind) {
    case FeatureKind::kRaw:
    case FeatureKind::kCov: {
      const std::size_t base = kind == FeatureKind::kRaw ? m * n : m * m;
      const std::size_t input = kind == FeatureKind::kRaw ? 2 * m * n : m * m;
      const std::size_t half = round_up4(base / 2 + base % 2);
      const std::size_t quarter = round_up4((base + 3) / 4);
      widths = {input, base, half, quarter, quarter, 1024, 512, 128, 32, 4, 2};
      break;
    }
    case FeatureKind::kCir: {
      const std::size_t base = m * l_bins;
      widths = {2 * base, base, base, base, 512, 512, 256, 128, 32, 4, 2};
      break;
    }
  }
  MlpSpec spec;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) spec.layers.push_back({widths[i], widths[i + 1]});
  return spec;
}

std::size_t param_count(const MlpSpec& spec) {
  std::size_t total = 0;
  for (const auto& l : spec.layers) total += l.in * l.out + l.out;
  return total;
}

MlpModel::MlpModel(MlpSpec spec) : spec_(std::move(spec)), id_(next_model_id++) {
  spec_.validate();
  const Rng base(spec_.seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto [in, out] = spec_.layers[i];
    Rng rng = base.derive(i);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    // Row-major draw order so the stream maps onto the serialized layout.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.uniform(-limit, limit);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    layers_.push_back(std::move(layer));
  }
}

std::vector<DenseLayer>& MlpModel::mutable_layers() {
  ++version_;
  return layers_;
}

Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x,
                              ForwardCache* cache) {
  const auto& layers = model.layers();
  if (static_cast<std::size_t>(x.rows()) != model.spec().input_dim()) {
    throw std::invalid_argument("forward: input length " + std::to_string(x.rows()) +
                                " != input dim " + std::to_string(model.spec().input_dim()));
  }
  const double slope = model.spec().leaky_slope;
  if (cache != nullptr) {
    cache->model_id = model.id();
    cache->model_version = model.version();
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weight * a;
    z.colwise() += layers[i].bias;
    const bool last = i + 1 == layers.size();
    Eigen::MatrixXd next = last ? z : leaky(z, slope);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(a));
      cache->pre_activations.push_back(std::move(z));
    }
    a = std::move(next);
  }
  return a;
}

ForwardResult forward(const MlpModel& model, std::span<const double> x) {
  const Eigen::MatrixXd input =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  ForwardResult result;
  const Eigen::MatrixXd out = forward_batch(model, input, &result.cache);
  result.y = {out(0, 0), out(1, 0)};
  return result;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& grad_out) {
  const auto& layers = model.layers();
  if (cache.model_id != model.id() || cache.model_version != model.version() ||
      cache.inputs.size() != layers.size()) {
    throw std::invalid_argument("backward: stale cache");
  }
  const Eigen::Index batch = cache.inputs.front().cols();
  if (grad_out.rows() != 2 || grad_out.cols() != batch) {
    throw std::invalid_argument("backward: grad_out shape does not match cached batch");
  }
  const double slope = model.spec().leaky_slope;
  Gradients g;
  g.weight.resize(layers.size());
  g.bias.resize(layers.size());
  Eigen::MatrixXd delta = grad_out;  // dLoss/dz of the current layer
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (i + 1 != layers.size()) {
      const auto& z = cache.pre_activations[i];
      delta.array() *= z.array().unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
    }
    g.weight[i].noalias() = delta * cache.inputs[i].transpose();
    g.bias[i] = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd prev = layers[i].weight.transpose() * delta;
      delta = std::move(prev);
    }
  }
  return g;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, Point2 grad_out) {
  Eigen::MatrixXd g(2, 1);
  g << grad_out.x, grad_out.y;
  return backward(model, cache, g);
}

double mse_loss(std::span<const Point2> pred, std::span<const Point2> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("mse_loss: length mismatch");
  if (pred.empty()) throw std::invalid_argument("mse_loss: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i].x - truth[i].x;
    const double dy = pred[i].y - truth[i].y;
    acc += dx * dx + dy * dy;
  }
  return acc / static_cast<double>(pred.size());
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw std::invalid_argument("train: lr0 must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw std::invalid_argument("train: lr_decay must be in (0, 1]");
  }
  if (lr_decay_every < 1) throw std::invalid_argument("train: lr_decay_every must be >= 1");
}

double learning_rate(const TrainConfig& config, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / config.lr_decay_every);
  return config.lr0 * std::pow(1.0 - config.lr_decay, steps);
}

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  std::size_t step = 0;

  explicit AdamState(const MlpModel& model) {
    for (const auto& l : model.layers()) {
      m_w.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      v_w.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      m_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
      v_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
  }
};

template <typename Param, typename Moment>
void adam_update(Param& p, const Param& g, Moment& m, Moment& v, double lr, double b1, double b2,
                 double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void apply_update(MlpModel& model, const Gradients& g, const TrainConfig& config, double lr,
                  AdamState& adam) {
  auto& layers = model.mutable_layers();
  if (config.optimizer == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].weight -= lr * g.weight[i];
      layers[i].bias -= lr * g.bias[i];
    }
    return;
  }
  ++adam.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    adam_update(layers[i].weight, g.weight[i], adam.m_w[i], adam.v_w[i], lr, config.beta1,
                config.beta2, config.epsilon, c1, c2);
    adam_update(layers[i].bias, g.bias[i], adam.m_b[i], adam.v_b[i], lr, config.beta1,
                config.beta2, config.epsilon, c1, c2);
  }
}

}  // namespace

TrainResult train(const MlpSpec& spec, const TrainConfig& config, std::span<const RVec> features,
                  std::span<const Point2> labels, std::span<const std::size_t> subset) {
  config.validate();
  if (features.size() != labels.size()) throw std::invalid_argument("train: features/labels mismatch");
  std::vector<std::size_t> order = resolve_subset(subset, features.size());
  if (order.empty()) throw std::invalid_argument("train: empty training set");
  for (std::size_t idx : order) {
    if (idx >= features.size()) throw std::invalid_argument("train: subset index out of range");
  }

  TrainResult result{MlpModel(spec), {}};
  MlpModel& model = result.model;
  const std::size_t dim = spec.input_dim();
  AdamState adam(model);
  ForwardCache cache;
  const Rng shuffle_base(config.shuffle_seed);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate(config, epoch);
    Rng rng = shuffle_base.derive(epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, count);
      const Eigen::MatrixXd x = gather(features, rows, dim);
      Eigen::MatrixXd diff = forward_batch(model, x, &cache);
      for (std::size_t c = 0; c < count; ++c) {
        diff(0, static_cast<Eigen::Index>(c)) -= labels[rows[c]].x;
        diff(1, static_cast<Eigen::Index>(c)) -= labels[rows[c]].y;
      }
      epoch_loss += diff.squaredNorm();
      const Eigen::MatrixXd grad_out = diff * (2.0 / static_cast<double>(count));
      const Gradients g = backward(model, cache, grad_out);
      apply_update(model, g, config, lr, adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw TrainingDiverged(epoch);
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

std::vector<Point2> predict(const MlpModel& model, std::span<const RVec> features,
                            std::span<const std::size_t> subset) {
  const std::vector<std::size_t> rows = resolve_subset(subset, features.size());
  std::vector<Point2> out;
  out.reserve(rows.size());
  for (std::size_t start = 0; start < rows.size(); start += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, rows.size() - start);
    const std::span<const std::size_t> chunk(rows.data() + start, count);
    const Eigen::MatrixXd y =
        forward_batch(model, gather(features, chunk, model.spec().input_dim()));
    for (Eigen::Index c = 0; c < y.cols(); ++c) out.push_back({y(0, c), y(1, c)});
  }
  return out;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kModelMagic, 4);
  detail::write_le<std::uint16_t>(os, kModelVersion);
  const auto& spec = model.spec();
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(spec.layers.size()));
  for (const auto& l : spec.layers) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(l.in));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(l.out));
  }
  detail::write_f64(os, spec.leaky_slope);
  for (const auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) detail::write_f64(os, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) detail::write_f64(os, layer.bias(r));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const std::string what = "model " + path.string();
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kModelMagic)) {
    throw std::runtime_error(what + ": bad magic");
  }
  const auto version = detail::read_le<std::uint16_t>(is, what);
  if (version != kModelVersion) throw std::runtime_error(what + ": unsupported version");
  MlpSpec spec;
  const auto count = detail::read_le<std::uint32_t>(is, what);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto in = detail::read_le<std::uint32_t>(is, what);
    const auto out = detail::read_le<std::uint32_t>(is, what);
    spec.layers.push_back({in, out});
  }
  spec.leaky_slope = detail::read_f64(is, what);
  MlpModel model(spec);
  for (auto& layer : model.mutable_layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = detail::read_f64(is, what);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = detail::read_f64(is, what);
  }
  return model;
}

}  // namespace mmloc
