#include "mmloc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mmloc {

CMat::CMat(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

CMat::CMat(std::size_t rows, std::size_t cols, std::vector<Complex> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("CMat: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

CMat CMat::identity(std::size_t n) {
  CMat out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

double CMat::frobenius_sq() const {
  double acc = 0.0;
  for (const auto& v : data_) acc += std::norm(v);
  return acc;
}

CMat& CMat::operator*=(double scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + Rng::kGamma));
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return splitmix64(seed_ + counter_ * kGamma);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::derive(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

namespace {

CVec dft_impl(std::span<const Complex> in, double sign, double scale) {
  const std::size_t n = in.size();
  if (n == 0) throw std::invalid_argument("empty vector");
  // Twiddles by exact index k*l mod n so large products do not lose phase accuracy.
  CVec twiddle(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n);
    twiddle[i] = std::polar(1.0, angle);
  }
  CVec out(n);
  for (std::size_t l = 0; l < n; ++l) {
    Complex acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += in[k] * twiddle[(k * l) % n];
    out[l] = acc * scale;
  }
  return out;
}

}  // namespace

CVec idft_row(std::span<const Complex> row) {
  return dft_impl(row, +1.0, 1.0 / static_cast<double>(row.size()));
}

CVec dft_row(std::span<const Complex> x) { return dft_impl(x, -1.0, 1.0); }

CMat hermitian_product(const CMat& y) {
  if (y.rows() == 0 || y.cols() == 0) {
    throw std::invalid_argument("hermitian_product: zero dimension");
  }
  const std::size_t m = y.rows();
  CMat out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ri = y.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto rj = y.row(j);
      Complex acc = 0.0;
      for (std::size_t k = 0; k < ri.size(); ++k) acc += ri[k] * std::conj(rj[k]);
      if (i == j) acc = Complex(acc.real(), 0.0);
      out(i, j) = acc;
      out(j, i) = std::conj(acc);
    }
  }
  return out;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile: q outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty set");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(values.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least two samples");
  const double ma = mean(a);
  const double mb = mean(b);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0.0 || vb <= 0.0) throw std::invalid_argument("degenerate errors");
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace mmloc
