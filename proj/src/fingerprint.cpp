#include "mmloc/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mmloc {

double normalization_factor(const Dataset& dataset) {
  if (dataset.snapshots.empty()) throw std::invalid_argument("normalize: empty dataset");
  double power = 0.0;
  std::size_t count = 0;
  for (const auto& s : dataset.snapshots) {
    power += s.y.frobenius_sq();
    count += s.y.size();
  }
  if (!(power > 0.0)) throw std::invalid_argument("zero-power dataset");
  return std::sqrt(static_cast<double>(count) / power);
}

NormalizedDataset normalize_dataset(Dataset dataset) {
  const double alpha = normalization_factor(dataset);
  for (auto& s : dataset.snapshots) s.y *= alpha;
  return {std::move(dataset), alpha};
}

CovFingerprint covariance_fingerprint(const CMat& y, CovLayout layout) {
  const CMat c = hermitian_product(y);
  const std::size_t m = c.rows();
  CovFingerprint out;
  out.values.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    out.values[i * m + i] = c(i, i).real();
    for (std::size_t j = 0; j < i; ++j) {
      if (layout == CovLayout::kLossless) {
        out.values[i * m + j] = c(i, j).real();
        out.values[j * m + i] = c(i, j).imag();
      } else {
        out.values[i * m + j] = c(i, j).real() + c(i, j).imag();
      }
    }
  }
  return out;
}

CMat unpack_covariance(std::span<const double> packed, std::size_t m) {
  if (packed.size() != m * m) throw std::invalid_argument("unpack_covariance: length != M^2");
  CMat c(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    c(i, i) = packed[i * m + i];
    for (std::size_t j = 0; j < i; ++j) {
      const Complex v(packed[i * m + j], packed[j * m + i]);
      c(i, j) = v;
      c(j, i) = std::conj(v);
    }
  }
  return c;
}

CirFingerprint cir_fingerprint(const CMat& y, std::size_t l_bins) {
  if (l_bins < 1 || l_bins > y.cols()) {
    throw std::invalid_argument("cir_fingerprint: L=" + std::to_string(l_bins) +
                                " outside [1, " + std::to_string(y.cols()) + "]");
  }
  const std::size_t m = y.rows();
  CirFingerprint out;
  out.l_bins = l_bins;
  out.values.assign(2 * m * l_bins, 0.0);
  const std::size_t im_block = m * l_bins;
  for (std::size_t r = 0; r < m; ++r) {
    const CVec taps = idft_row(y.row(r));
    for (std::size_t l = 0; l < l_bins; ++l) {
      out.values[r * l_bins + l] = taps[l].real();
      out.values[im_block + r * l_bins + l] = taps[l].imag();
    }
  }
  return out;
}

RawFingerprint raw_fingerprint(const CMat& y) {
  RawFingerprint out;
  const auto data = y.data();
  out.values.resize(2 * data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    out.values[k] = data[k].real();
    out.values[data.size() + k] = data[k].imag();
  }
  return out;
}

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kRaw: return "raw";
    case FeatureKind::kCov: return "cov";
    case FeatureKind::kCir: return "cir";
  }
  return "?";
}

std::size_t default_cir_bins(std::size_t n_subcarriers) {
  return n_subcarriers < 20 ? std::max<std::size_t>(1, n_subcarriers / 2) : 10;
}

std::vector<RVec> compute_features(const Dataset& dataset, FeatureKind kind,
                                   const FingerprintOptions& options) {
  std::vector<RVec> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.snapshots) {
    switch (kind) {
      case FeatureKind::kRaw: out.push_back(raw_fingerprint(s.y).values); break;
      case FeatureKind::kCov:
        out.push_back(covariance_fingerprint(s.y, options.cov_layout).values);
        break;
      case FeatureKind::kCir: out.push_back(cir_fingerprint(s.y, options.cir_bins).values); break;
    }
  }
  return out;
}

FeatureScaler FeatureScaler::fit(std::span<const RVec> rows, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("FeatureScaler: empty fit set");
  const std::size_t dim = rows[subset[0]].size();
  FeatureScaler s;
  s.mean_.assign(dim, 0.0);
  s.inv_std_.assign(dim, 0.0);
  for (std::size_t idx : subset) {
    for (std::size_t d = 0; d < dim; ++d) s.mean_[d] += rows[idx][d];
  }
  for (auto& v : s.mean_) v /= static_cast<double>(subset.size());
  for (std::size_t idx : subset) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = rows[idx][d] - s.mean_[d];
      s.inv_std_[d] += diff * diff;
    }
  }
  for (auto& v : s.inv_std_) {
    const double sd = std::sqrt(v / static_cast<double>(subset.size()));
    // Constant features (structural zeros of the literal packing) stay centred only.
    v = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  return s;
}

void FeatureScaler::apply(RVec& row) const {
  if (row.size() != mean_.size()) throw std::invalid_argument("FeatureScaler: dimension mismatch");
  for (std::size_t d = 0; d < row.size(); ++d) row[d] = (row[d] - mean_[d]) * inv_std_[d];
}

}  // namespace mmloc
