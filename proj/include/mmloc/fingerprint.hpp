#pragma once

#include <span>
#include <vector>

#include "mmloc/channel_sim.hpp"
#include "mmloc/numerics.hpp"

namespace mmloc {

// All matrix-to-vector packings here stack rows (row-major order).

enum class CovLayout {
  // Re(C_ij) at (i, j) for i >= j, Im(C_ij) mirrored into (j, i) for i > j.
  kLossless,
  // ltril(Re C) + sltril(Im C): Re and Im summed below the diagonal, zeros above.
  kLiteral,
};

struct CovFingerprint {
  RVec values;  // M^2
};

struct CirFingerprint {
  RVec values;  // [Re D; Im D], 2 * M * L
  std::size_t l_bins = 0;
};

struct RawFingerprint {
  RVec values;  // [Re Y; Im Y], 2 * M * N
};

struct NormalizedDataset {
  Dataset dataset;
  double alpha = 1.0;
};

/// Scales every snapshot by alpha = sqrt(T M N / ||A||_F^2) so the mean entry
/// power is one. Throws "zero-power dataset" for an all-zero tensor.
NormalizedDataset normalize_dataset(Dataset dataset);

/// alpha for a dataset without applying it.
double normalization_factor(const Dataset& dataset);

CovFingerprint covariance_fingerprint(const CMat& y, CovLayout layout = CovLayout::kLossless);

/// Rebuilds the Hermitian C from a lossless packing.
CMat unpack_covariance(std::span<const double> packed, std::size_t m);

/// First l_bins taps of the per-antenna IDFT. Requires 1 <= l_bins <= N.
CirFingerprint cir_fingerprint(const CMat& y, std::size_t l_bins);

RawFingerprint raw_fingerprint(const CMat& y);

enum class FeatureKind { kRaw, kCov, kCir };

const char* feature_kind_name(FeatureKind kind);

struct FingerprintOptions {
  CovLayout cov_layout = CovLayout::kLossless;
  std::size_t cir_bins = 10;
};

/// Default L: 10, or N / 2 when N < 20.
std::size_t default_cir_bins(std::size_t n_subcarriers);

/// Fingerprints of every snapshot for one feature kind.
std::vector<RVec> compute_features(const Dataset& dataset, FeatureKind kind,
                                   const FingerprintOptions& options);

/// Per-feature z-scoring fitted on a subset of rows. Off by default in the pipeline.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  static FeatureScaler fit(std::span<const RVec> rows, std::span<const std::size_t> subset);
  void apply(RVec& row) const;

 private:
  RVec mean_;
  RVec inv_std_;
};

}  // namespace mmloc
