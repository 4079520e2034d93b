#include "mmloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mmloc {

Split split(std::size_t total, const SplitPlan& plan, std::size_t batch_size) {
  if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0, 1)");
  }
  Split out;
  if (plan.strategy == SplitStrategy::kStride) {
    const auto stride = static_cast<std::size_t>(std::floor(1.0 / plan.train_fraction));
    for (std::size_t i = 0; i < total; ++i) (i % stride == 0 ? out.train : out.test).push_back(i);
  } else {
    const auto count =
        static_cast<std::size_t>(std::llround(plan.train_fraction * static_cast<double>(total)));
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    Rng rng(plan.seed);
    for (std::size_t i = 0; i < std::min(count, total); ++i) {
      std::swap(all[i], all[i + rng.uniform_index(total - i)]);
    }
    std::vector<bool> is_train(total, false);
    for (std::size_t i = 0; i < std::min(count, total); ++i) is_train[all[i]] = true;
    for (std::size_t i = 0; i < total; ++i) (is_train[i] ? out.train : out.test).push_back(i);
  }
  if (out.train.size() < batch_size) {
    throw std::invalid_argument("split: " + std::to_string(out.train.size()) +
                                " training samples is fewer than batch_size " +
                                std::to_string(batch_size));
  }
  if (out.test.empty()) throw std::invalid_argument("split: empty test set");
  return out;
}

namespace {

BranchOutput run_branch(const Dataset& normalized, const Split& split, FeatureKind kind,
                        const BranchConfig& config, const FingerprintOptions& options) {
  std::vector<RVec> features = compute_features(normalized, kind, options);
  if (config.standardize) {
    const FeatureScaler scaler = FeatureScaler::fit(features, split.train);
    for (auto& row : features) scaler.apply(row);
  }

  Point2 centre;
  for (std::size_t i : split.train) {
    centre.x += normalized.snapshots[i].position.x;
    centre.y += normalized.snapshots[i].position.y;
  }
  centre.x /= static_cast<double>(split.train.size());
  centre.y /= static_cast<double>(split.train.size());

  // Test slots stay NaN so a leak into training would surface as divergence.
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  std::vector<Point2> labels(normalized.size(), Point2{kNaN, kNaN});
  for (std::size_t i : split.train) {
    const Point2 p = normalized.snapshots[i].position;
    labels[i] = {p.x - centre.x, p.y - centre.y};
  }

  MlpSpec spec = build_spec(kind, normalized.n_antennas(), normalized.n_subcarriers(),
                            options.cir_bins);
  spec.leaky_slope = config.leaky_slope;
  spec.seed = config.model_seed;

  TrainResult trained = train(spec, config.train, features, labels, split.train);
  BranchOutput out;
  out.kind = kind;
  out.predictions = predict(trained.model, features, split.test);
  for (auto& p : out.predictions) {
    p.x += centre.x;
    p.y += centre.y;
  }
  out.loss_history = std::move(trained.loss_history);
  out.model.emplace(std::move(trained.model));
  return out;
}

}  // namespace

std::vector<BranchOutput> run_branches(const Dataset& normalized, const Split& split,
                                       const BranchConfigs& configs) {
  if (normalized.snapshots.empty()) throw std::invalid_argument("run_branches: empty dataset");
  std::vector<BranchOutput> out;
  out.push_back(run_branch(normalized, split, FeatureKind::kCov, configs.cov, configs.fingerprints));
  out.push_back(run_branch(normalized, split, FeatureKind::kCir, configs.cir, configs.fingerprints));
  if (configs.include_raw) {
    out.push_back(run_branch(normalized, split, FeatureKind::kRaw, configs.raw, configs.fingerprints));
  }
  return out;
}

Point2 fuse(Point2 p1, Point2 p2) { return {(p1.x + p2.x) / 2.0, (p1.y + p2.y) / 2.0}; }

double error_correlation(std::span<const double> e1, std::span<const double> e2) {
  return pearson(e1, e2);
}

std::vector<CorrelationPoint> spatial_correlation(const Dataset& dataset,
                                                  std::span<const std::size_t> trajectory,
                                                  std::span<const double> deltas) {
  if (trajectory.size() < 2) throw std::invalid_argument("spatial_correlation: trajectory too short");
  const auto& snaps = dataset.snapshots;
  const double spacing =
      distance(snaps[trajectory[0]].position, snaps[trajectory[1]].position);
  if (!(spacing > 0.0)) throw std::invalid_argument("spatial_correlation: repeated positions");

  std::vector<double> norms;
  norms.reserve(trajectory.size());
  for (std::size_t idx : trajectory) norms.push_back(std::sqrt(snaps[idx].y.frobenius_sq()));

  std::vector<CorrelationPoint> out;
  for (double delta : deltas) {
    const auto offset = static_cast<std::size_t>(std::llround(delta / spacing));
    if (delta < 0.0 || offset >= trajectory.size()) {
      throw std::invalid_argument("spatial_correlation: delta " + std::to_string(delta) +
                                  " m exceeds the trajectory");
    }
    if (std::abs(static_cast<double>(offset) * spacing - delta) > 0.05 * delta) {
      throw std::invalid_argument("spatial_correlation: delta " + std::to_string(delta) +
                                  " m does not map onto the sample grid");
    }
    const std::size_t count = trajectory.size() - offset;
    Complex acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const auto a = snaps[trajectory[i]].y.data();
      const auto b = snaps[trajectory[i + offset]].y.data();
      Complex inner = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) inner += std::conj(a[k]) * b[k];
      acc += inner / std::sqrt(norms[i] * norms[i] * norms[i + offset] * norms[i + offset]);
    }
    out.push_back({delta, std::abs(acc / static_cast<double>(count))});
  }
  return out;
}

std::vector<double> delta_grid(double lambda, double max_lambdas, double step_lambdas) {
  if (!(step_lambdas > 0.0) || max_lambdas < 0.0) {
    throw std::invalid_argument("delta_grid: step must be positive and max non-negative");
  }
  const auto steps = static_cast<std::size_t>(std::floor(max_lambdas / step_lambdas + 1e-9));
  std::vector<double> out;
  for (std::size_t i = 0; i <= steps; ++i) {
    out.push_back(static_cast<double>(i) * step_lambdas * lambda);
  }
  return out;
}

const MethodErrors& EvalReport::method(const std::string& label) const {
  for (const auto& m : methods) {
    if (m.label == label) return m;
  }
  throw std::out_of_range("EvalReport: no method " + label);
}

EvalReport evaluate(std::span<const Point2> truth, std::span<const MethodPredictions> methods) {
  EvalReport report;
  for (const auto& method : methods) {
    if (method.predictions.size() != truth.size()) {
      throw std::invalid_argument("evaluate: " + method.label + " predictions not aligned with truth");
    }
    if (truth.empty()) throw std::invalid_argument("evaluate: empty test set");
    MethodErrors m;
    m.label = method.label;
    m.errors.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      m.errors.push_back(distance(method.predictions[i], truth[i]));
    }
    m.p50 = percentile(m.errors, 0.50);
    m.p90 = percentile(m.errors, 0.90);
    m.p95 = percentile(m.errors, 0.95);
    for (int q = 0; q <= 100; ++q) {
      const double fraction = q / 100.0;
      m.cdf.push_back({percentile(m.errors, fraction), fraction});
    }
    report.methods.push_back(std::move(m));
  }
  report.rho = std::numeric_limits<double>::quiet_NaN();
  const MethodErrors* cov = nullptr;
  const MethodErrors* cir = nullptr;
  for (const auto& m : report.methods) {
    if (m.label == "cov") cov = &m;
    if (m.label == "cir") cir = &m;
  }
  if (cov != nullptr && cir != nullptr) {
    const double v1 = variance(cov->errors);
    const double v2 = variance(cir->errors);
    if (v1 > 0.0 && v2 > 0.0) report.rho = error_correlation(cov->errors, cir->errors);
  }
  return report;
}

ExperimentResult run_experiment(const Dataset& normalized, const SplitPlan& plan,
                                const BranchConfigs& configs) {
  const std::size_t batch = std::max({configs.cov.train.batch_size, configs.cir.train.batch_size,
                                      configs.include_raw ? configs.raw.train.batch_size : 0});
  ExperimentResult result;
  result.split = split(normalized.size(), plan, batch);
  result.branches = run_branches(normalized, result.split, configs);

  const auto& cov = result.branches[0].predictions;
  const auto& cir = result.branches[1].predictions;
  result.fused.reserve(cov.size());
  for (std::size_t i = 0; i < cov.size(); ++i) result.fused.push_back(fuse(cov[i], cir[i]));

  std::vector<Point2> truth;
  truth.reserve(result.split.test.size());
  for (std::size_t i : result.split.test) truth.push_back(normalized.snapshots[i].position);

  std::vector<MethodPredictions> methods{{"fused", result.fused}, {"cov", cov}, {"cir", cir}};
  if (configs.include_raw) methods.push_back({"raw", result.branches[2].predictions});
  result.report = evaluate(truth, methods);
  return result;
}

}  // namespace mmloc
