// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "mmloc/commands.hpp"
#include "mmloc/config.hpp"
#include "mmloc/fingerprint.hpp"
#include "mmloc/neuralnet.hpp"
#include "mmloc/pipeline.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mmloc;

namespace {

const fs::path kSourceDir = MMLOC_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Max-norm relative difference between two equally sized real vectors.
double rel_diff(const RVec& got, const RVec& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num = std::max(num, std::abs(got[i] - want[i]));
    den = std::max(den, std::abs(want[i]));
  }
  return den > 0.0 ? num / den : num;
}

CMat random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  CMat m(rows, cols);
  const double scale = std::exp(rng.uniform(-5.0, 5.0));
  for (auto& v : m.data()) v = {scale * rng.normal(), scale * rng.normal()};
  return m;
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  constexpr int kInstances = 200;
  constexpr double kTol = 1e-10;
  double worst_cov = 0.0, worst_lit = 0.0, worst_cir = 0.0, worst_alpha = 0.0;

  for (int trial = 0; trial < kInstances; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(12);
    const std::size_t n = 1 + rng.uniform_index(32);
    const CMat y = random_matrix(rng, m, n);

    // Covariance entries summed in extended precision.
    std::vector<std::complex<long double>> c(m * m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        std::complex<long double> acc = 0.0L;
        for (std::size_t k = 0; k < n; ++k) {
          acc += std::complex<long double>(y(i, k)) * std::conj(std::complex<long double>(y(j, k)));
        }
        c[i * m + j] = acc;
      }
    }
    RVec lossless(m * m), literal(m * m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const auto& v = c[i * m + j];
        lossless[i * m + j] = i >= j ? double(v.real()) : double(c[j * m + i].imag());
        literal[i * m + j] = (i >= j ? double(v.real()) : 0.0) + (i > j ? double(v.imag()) : 0.0);
      }
    }
    worst_cov = std::max(worst_cov, rel_diff(covariance_fingerprint(y).values, lossless));
    worst_lit = std::max(worst_lit,
                         rel_diff(covariance_fingerprint(y, CovLayout::kLiteral).values, literal));

    // Truncated inverse DFT by direct summation.
    const std::size_t l_bins = 1 + rng.uniform_index(n);
    RVec cir(2 * m * l_bins);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t l = 0; l < l_bins; ++l) {
        std::complex<long double> acc = 0.0L;
        for (std::size_t k = 0; k < n; ++k) {
          const long double angle = 2.0L * std::numbers::pi_v<long double> *
                                    static_cast<long double>(k * l % n) / static_cast<long double>(n);
          acc += std::complex<long double>(y(a, k)) *
                 std::complex<long double>(std::cos(angle), std::sin(angle));
        }
        acc /= static_cast<long double>(n);
        cir[a * l_bins + l] = double(acc.real());
        cir[m * l_bins + a * l_bins + l] = double(acc.imag());
      }
    }
    worst_cir = std::max(worst_cir, rel_diff(cir_fingerprint(y, l_bins).values, cir));

    // Normalization factor over a small dataset of same-shape snapshots.
    Dataset d;
    const std::size_t t = 1 + rng.uniform_index(6);
    long double power = 0.0L;
    for (std::size_t s = 0; s < t; ++s) {
      const CMat ys = random_matrix(rng, m, n);
      for (const auto& v : ys.data()) power += std::norm(std::complex<long double>(v));
      d.snapshots.push_back({ys, {0.0, 0.0}});
    }
    const double alpha = double(std::sqrt(static_cast<long double>(t * m * n) / power));
    const NormalizedDataset nd = normalize_dataset(d);
    double err = std::abs(nd.alpha - alpha) / alpha;
    for (std::size_t s = 0; s < t; ++s) {
      for (std::size_t k = 0; k < m * n; ++k) {
        const Complex want = alpha * d.snapshots[s].y.data()[k];
        const double scale = std::abs(want) > 0.0 ? std::abs(want) : 1.0;
        err = std::max(err, std::abs(nd.dataset.snapshots[s].y.data()[k] - want) / scale);
      }
    }
    worst_alpha = std::max(worst_alpha, err);
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_cov <= kTol && worst_lit <= kTol && worst_cir <= kTol &&
                    worst_alpha <= kTol && secs < 60.0;
  return {pass, fmt("%d instances each; worst rel err cov %.1e, literal %.1e, cir %.1e, alpha %.1e; %.1f s",
                    kInstances, worst_cov, worst_lit, worst_cir, worst_alpha, secs)};
}

oracle::FdReport gradient_check_one(const MlpSpec& spec, Rng& rng) {
  MlpModel model(spec);
  for (auto& layer : model.mutable_layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * rng.normal();
  }
  RVec x(spec.input_dim());
  for (auto& v : x) v = rng.normal();
  const Eigen::Vector2d target(rng.normal(), rng.normal());
  const ForwardResult fr = forward(model, x);
  const Gradients g =
      backward(model, fr.cache, Point2{2.0 * (fr.y.x - target(0)), 2.0 * (fr.y.y - target(1))});
  return oracle::fd_check(model, Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size())),
                          target, g, 1e-6, 1e-4, 1e-8);
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(77);
  bool pass = true;
  std::string detail;
  for (FeatureKind kind : {FeatureKind::kRaw, FeatureKind::kCov, FeatureKind::kCir}) {
    MlpSpec full = build_spec(kind, 8, 16, 4);
    full.seed = 100 + static_cast<std::uint64_t>(kind);
    MlpSpec small;
    small.layers = {{full.input_dim(), 24}, {24, 12}, {12, 2}};
    small.seed = 200 + static_cast<std::uint64_t>(kind);
    for (const MlpSpec* spec : {&small, &full}) {
      const oracle::FdReport r = gradient_check_one(*spec, rng);
      pass = pass && r.failures == 0 && r.checked > 0;
      detail += fmt("%s/%zu-layer %zu/%zu ok (%zu kinks skipped); ", feature_kind_name(kind),
                    spec->layers.size(), r.checked - r.failures, param_count(*spec), r.skipped_kinks);
    }
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 120.0;
  return {pass, detail + fmt("%.1f s", secs)};
}

Outcome learning_rate_schedule() {
  TrainConfig c;
  c.lr0 = 1e-4;
  c.lr_decay = 0.2;
  c.lr_decay_every = 10;
  const double e0 = learning_rate(c, 0);
  const double e10 = learning_rate(c, 10);
  const double e25 = learning_rate(c, 25);
  const double ulp25 = std::nextafter(6.4e-5, 1.0) - 6.4e-5;
  const bool pass = e0 == 1e-4 && e10 == 8e-5 && std::abs(e25 - 6.4e-5) <= ulp25;
  return {pass, fmt("epoch 0 %.17g, epoch 10 %.17g (bitwise equal); epoch 25 %.17g (%g ulp from "
                    "the literal 6.4e-5, bitwise equality %s)",
                    e0, e10, e25, std::abs(e25 - 6.4e-5) / ulp25, e25 == 6.4e-5 ? "holds" : "does not hold")};
}

// t0 marks the start of dataset generation, which counts toward the budget.
Outcome spatial_shape(const Dataset& desk, std::chrono::steady_clock::time_point t0) {
  const double lambda = desk.scene.wavelength();
  const std::vector<double> deltas{0.0, lambda / 8.0, lambda};
  const auto line = first_line_indices(desk);
  const auto rho = spatial_correlation(desk, line, deltas);
  const double secs = seconds_since(t0);
  const bool pass = rho[0].abs_rho == 1.0 && rho[1].abs_rho > 0.8 &&
                    rho[1].abs_rho > rho[2].abs_rho && secs < 60.0;
  return {pass, fmt("|rho(0)| = %.17g, |rho(lambda/8)| = %.4f, |rho(lambda)| = %.4f; %.1f s including generation",
                    rho[0].abs_rho, rho[1].abs_rho, rho[2].abs_rho, secs)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mmloc_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream log;
  std::string reports[2];
  for (int i = 0; i < 2; ++i) {
    ConfigOverrides o;
    o.out_dir = root / std::to_string(i);
    const RunConfig c =
        resolve_run_config(KeyValueConfig::load(kSourceDir / "configs" / "smoke.cfg"), o);
    cmd_run(c, log);
    std::ifstream is(*o.out_dir / kReportFileName, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    reports[i] = os.str();
  }
  const bool pass = !reports[0].empty() && reports[0] == reports[1];
  return {pass, fmt("two runs of configs/smoke.cfg: report.csv %zu bytes each, %s", reports[0].size(),
                    pass ? "identical" : "different")};
}

Outcome complexity_scaling() {
  auto ratio = [](FeatureKind kind, std::size_t m) {
    return double(param_count(build_spec(kind, 2 * m, 64, 10))) /
           double(param_count(build_spec(kind, m, 64, 10)));
  };
  const double cov = ratio(FeatureKind::kCov, 100);
  const double cir = ratio(FeatureKind::kCir, 100);
  const bool pass = std::abs(cov / 16.0 - 1.0) <= 0.15 && std::abs(cir / 4.0 - 1.0) <= 0.15;
  return {pass, fmt("M 100 -> 200, N 64, L 10: cov ratio %.2f (16 +- 15%%), cir ratio %.2f (4 +- 15%%); "
                    "for reference at M 32 -> 64: cov %.2f, cir %.2f",
                    cov, cir, ratio(FeatureKind::kCov, 32), ratio(FeatureKind::kCir, 32))};
}

void report(int id, const char* name, const Outcome& o, int& failures) {
  std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

}  // namespace

int main() {
  int failures = 0;
  report(1, "oracle equivalence", oracle_equivalence(), failures);
  report(2, "gradient correctness", gradient_correctness(), failures);
  report(3, "learning-rate schedule", learning_rate_schedule(), failures);

  const auto t_gen = std::chrono::steady_clock::now();
  const RunConfig desk = resolve_run_config(KeyValueConfig::load(kSourceDir / "configs" / "desk.cfg"));
  const Dataset raw_desk = load_or_generate(desk);
  std::printf("desk scene: T=%zu M=%zu N=%zu generated in %.1f s\n", raw_desk.snapshots.size(),
              desk.scene.n_antennas(), desk.scene.n_subcarriers, seconds_since(t_gen));
  report(4, "spatial correlation shape", spatial_shape(raw_desk, t_gen), failures);

  const auto t_run = std::chrono::steady_clock::now();
  const NormalizedDataset normalized = normalize_dataset(raw_desk);
  SplitPlan dense = desk.split;
  dense.train_fraction = 0.1;
  const ExperimentResult r10 = run_experiment(normalized.dataset, dense, desk.branches);
  const double run_secs = seconds_since(t_run);
  const double fused10 = r10.report.method("fused").p50;
  const double cov10 = r10.report.method("cov").p50;
  const double cir10 = r10.report.method("cir").p50;
  const double raw10 = desk.branches.include_raw ? r10.report.method("raw").p50 : NAN;
  const double bound = 1.05 * std::min(cov10, cir10);
  report(5, "fusion gain",
         {fused10 <= bound && r10.report.rho < 0.6 && run_secs < 1800.0,
          fmt("10%% stride: median fused %.4f m <= %.4f m (cov %.4f, cir %.4f, raw %.4f), rho %.3f; %.0f s",
              fused10, bound, cov10, cir10, raw10, r10.report.rho, run_secs)},
         failures);

  SplitPlan sparse = desk.split;
  sparse.train_fraction = 0.02;
  const ExperimentResult r2 = run_experiment(normalized.dataset, sparse, desk.branches);
  const double fused2 = r2.report.method("fused").p50;
  report(6, "training-density degradation",
         {fused2 >= fused10, fmt("median fused at 2%% %.4f m >= at 10%% %.4f m (2%%: cov %.4f, cir %.4f)",
                                 fused2, fused10, r2.report.method("cov").p50, r2.report.method("cir").p50)},
         failures);

  const double lambda = desk.scene.wavelength();
  report(7, "sub-wavelength accuracy",
         {fused10 < lambda, fmt("median fused %.4f m < lambda %.4f m", fused10, lambda)}, failures);
  report(8, "determinism", determinism(), failures);
  report(9, "complexity scaling", complexity_scaling(), failures);

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
