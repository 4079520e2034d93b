#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mmloc {

using Complex = std::complex<double>;
using RVec = std::vector<double>;
using CVec = std::vector<Complex>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Dense complex matrix, row-major.
class CMat {
 public:
  CMat() = default;
  CMat(std::size_t rows, std::size_t cols);
  CMat(std::size_t rows, std::size_t cols, std::vector<Complex> data);

  static CMat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<Complex> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Complex> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const Complex> data() const { return data_; }
  std::span<Complex> data() { return data_; }

  // Sum of |entry|^2.
  double frobenius_sq() const;

  CMat& operator*=(double scale);

  friend bool operator==(const CMat&, const CMat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

/// Counter-based generator: draw n is splitmix64(seed + (n + 1) * kGamma).
/// The stream depends only on the seed and the draw count, so it is the same
/// on every platform and can be derived per item without shared state.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Box-Muller, one draw per two uniforms).
  double normal();

  /// Independent child stream keyed by `stream`.
  Rng derive(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with a stream id; used to hand out per-component seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// out[l] = (1/N) sum_k row[k] exp(+j 2 pi k l / N).
CVec idft_row(std::span<const Complex> row);
/// out[k] = sum_l x[l] exp(-j 2 pi k l / N); exact inverse of idft_row.
CVec dft_row(std::span<const Complex> x);

/// Y * Y^H.
CMat hermitian_product(const CMat& y);

/// Linear-interpolation quantile on the sorted values, q in [0, 1].
double percentile(std::span<const double> values, double q);

double mean(std::span<const double> values);
/// Population variance.
double variance(std::span<const double> values);
/// Pearson correlation coefficient. Throws on zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace mmloc
