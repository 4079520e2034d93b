#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmloc/channel_sim.hpp"
#include "mmloc/fingerprint.hpp"
#include "mmloc/neuralnet.hpp"

namespace mmloc {

enum class SplitStrategy { kStride, kRandom };

struct SplitPlan {
  double train_fraction = 0.1;
  SplitStrategy strategy = SplitStrategy::kStride;
  std::uint64_t seed = 0;  // random strategy only
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stride takes every floor(1 / fraction)-th snapshot; random draws
/// round(fraction * total) without replacement. Both index lists are sorted.
/// Throws when the train set is smaller than batch_size or the test set is empty.
Split split(std::size_t total, const SplitPlan& plan, std::size_t batch_size);

struct BranchConfig {
  TrainConfig train;
  bool standardize = false;
  std::uint64_t model_seed = 0;
  double leaky_slope = 0.01;
};

struct BranchConfigs {
  BranchConfig cov;
  BranchConfig cir;
  BranchConfig raw;
  FingerprintOptions fingerprints;
  bool include_raw = true;
};

struct BranchOutput {
  FeatureKind kind = FeatureKind::kCov;
  std::vector<Point2> predictions;  // aligned with Split::test
  std::vector<double> loss_history;
  std::optional<MlpModel> model;
};

/// Trains the covariance, CIR and (optionally) raw networks on the same
/// split of an already normalized dataset. Only training labels are read.
/// Labels are expressed relative to the training-label centroid inside each
/// network; predictions are returned in room coordinates.
std::vector<BranchOutput> run_branches(const Dataset& normalized, const Split& split,
                                       const BranchConfigs& configs);

Point2 fuse(Point2 p1, Point2 p2);

/// Pearson correlation of two error lists; throws "degenerate errors" on zero variance.
double error_correlation(std::span<const double> e1, std::span<const double> e2);

struct CorrelationPoint {
  double delta = 0.0;  // m
  double abs_rho = 0.0;
};

/// Average normalized inner product of vectorized snapshots separated by
/// delta along one straight trajectory (indices ordered along the line).
std::vector<CorrelationPoint> spatial_correlation(const Dataset& dataset,
                                                  std::span<const std::size_t> trajectory,
                                                  std::span<const double> deltas);

/// 0 .. max_lambdas * lambda in steps of step_lambdas * lambda, inclusive.
std::vector<double> delta_grid(double lambda, double max_lambdas = 2.0,
                               double step_lambdas = 1.0 / 16.0);

struct CdfPoint {
  double error = 0.0;
  double fraction = 0.0;
};

struct MethodErrors {
  std::string label;
  std::vector<double> errors;  // m, aligned with the test set
  double p50 = 0.0;
  double p90 = 0.0;
  double p95 = 0.0;
  std::vector<CdfPoint> cdf;  // 101 points, one per percentile
};

struct MethodPredictions {
  std::string label;
  std::vector<Point2> predictions;
};

struct EvalReport {
  std::vector<MethodErrors> methods;
  double rho = 0.0;  // cov vs cir branch errors; NaN when either is absent or constant

  const MethodErrors& method(const std::string& label) const;
};

/// Per-sample Euclidean errors, percentiles and CDF for each method, plus the
/// cov/cir error correlation.
EvalReport evaluate(std::span<const Point2> truth, std::span<const MethodPredictions> methods);

struct ExperimentResult {
  Split split;
  std::vector<BranchOutput> branches;
  std::vector<Point2> fused;
  EvalReport report;
};

/// split -> run_branches -> fuse -> evaluate. Methods are reported in the
/// order fused, cov, cir, raw.
ExperimentResult run_experiment(const Dataset& normalized, const SplitPlan& plan,
                                const BranchConfigs& configs);

}  // namespace mmloc
