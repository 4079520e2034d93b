#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mmloc/neuralnet.hpp"
#include "oracles.hpp"

namespace mmloc {
namespace {

MlpSpec chain(std::vector<std::size_t> widths, std::uint64_t seed = 1) {
  MlpSpec s;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) s.layers.push_back({widths[i], widths[i + 1]});
  s.seed = seed;
  return s;
}

std::vector<std::size_t> widths_of(const MlpSpec& s) {
  std::vector<std::size_t> w{s.layers.front().in};
  for (const auto& l : s.layers) w.push_back(l.out);
  return w;
}

TEST(BuildSpec, CovarianceNetworkAtHundredAntennas) {
  const MlpSpec s = build_spec(FeatureKind::kCov, 100, 100, 10);
  EXPECT_EQ(s.layers[0], (LayerDims{10000, 10000}));
  EXPECT_EQ(s.layers[1], (LayerDims{10000, 5000}));
  EXPECT_EQ(widths_of(s),
            (std::vector<std::size_t>{10000, 10000, 5000, 2500, 2500, 1024, 512, 128, 32, 4, 2}));
}

TEST(BuildSpec, CirNetworkAtHundredAntennas) {
  const MlpSpec s = build_spec(FeatureKind::kCir, 100, 100, 10);
  EXPECT_EQ(s.layers[0], (LayerDims{2000, 1000}));
  EXPECT_EQ(s.layers[3], (LayerDims{1000, 512}));
  EXPECT_EQ(widths_of(s),
            (std::vector<std::size_t>{2000, 1000, 1000, 1000, 512, 512, 256, 128, 32, 4, 2}));
}

TEST(BuildSpec, RawNetworkRoundsSmallWidths) {
  const MlpSpec s = build_spec(FeatureKind::kRaw, 4, 4, 2);
  EXPECT_EQ(s.layers[0], (LayerDims{32, 16}));
  EXPECT_EQ(widths_of(s),
            (std::vector<std::size_t>{32, 16, 8, 4, 4, 1024, 512, 128, 32, 4, 2}));
  // M^2/4 = 2.25 rounds up to 4.
  const MlpSpec c = build_spec(FeatureKind::kCov, 3, 4, 2);
  EXPECT_EQ(widths_of(c)[3], 4u);
  EXPECT_EQ(widths_of(c)[2], 8u);
  EXPECT_NO_THROW(c.validate());
}

TEST(MlpSpecValidate, RejectsBrokenSchedules) {
  EXPECT_THROW(MlpSpec{}.validate(), std::invalid_argument);
  MlpSpec s = chain({3, 4, 2});
  s.layers[1].in = 5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(chain({3, 3}).validate(), std::invalid_argument);
  MlpSpec slope = chain({3, 2});
  slope.leaky_slope = 1.5;
  EXPECT_THROW(slope.validate(), std::invalid_argument);
}

TEST(Forward, IdentityLayersShowLeakyHidden) {
  MlpModel m(chain({2, 2, 2}));
  for (auto& l : m.mutable_layers()) {
    l.weight.setIdentity();
    l.bias.setZero();
  }
  const RVec x{2.0, -1.0};
  const Point2 y = forward(m, x).y;
  EXPECT_DOUBLE_EQ(y.x, 2.0);
  EXPECT_DOUBLE_EQ(y.y, -0.01);
}

TEST(Forward, ZeroParametersGiveZero) {
  MlpModel m(chain({5, 7, 2}));
  for (auto& l : m.mutable_layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const RVec x{1, -2, 3, 1e6, -5};
  const Point2 y = forward(m, x).y;
  EXPECT_EQ(y.x, 0.0);
  EXPECT_EQ(y.y, 0.0);
}

TEST(Forward, MatchesLoopOracle) {
  Rng rng(3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    MlpModel m(chain({9, 13, 6, 2}, seed));
    for (auto& l : m.mutable_layers()) l.bias = Eigen::VectorXd::Random(l.bias.size());
    RVec x(9);
    for (auto& v : x) v = rng.normal();
    const auto expected = oracle::forward(m, x);
    const Point2 y = forward(m, x).y;
    EXPECT_NEAR(y.x, expected[0], 1e-12);
    EXPECT_NEAR(y.y, expected[1], 1e-12);
  }
}

TEST(Forward, BatchMatchesSingle) {
  MlpModel m(chain({4, 8, 2}, 9));
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  const Eigen::MatrixXd y = forward_batch(m, x);
  for (Eigen::Index c = 0; c < 5; ++c) {
    const RVec col(x.col(c).data(), x.col(c).data() + 4);
    const Point2 p = forward(m, col).y;
    EXPECT_NEAR(y(0, c), p.x, 1e-13);
    EXPECT_NEAR(y(1, c), p.y, 1e-13);
  }
}

TEST(Forward, LengthMismatchThrows) {
  MlpModel m(chain({3, 2}));
  const RVec x{1.0, 2.0};
  EXPECT_THROW(forward(m, x), std::invalid_argument);
}

TEST(GlorotInit, BoundsAndZeroBias) {
  MlpModel m(chain({30, 50, 2}, 4));
  const double bound = std::sqrt(6.0 / 80.0);
  EXPECT_LE(m.layers()[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(m.layers()[0].weight.cwiseAbs().maxCoeff(), 0.9 * bound);
  EXPECT_EQ(m.layers()[0].bias.cwiseAbs().maxCoeff(), 0.0);
  MlpModel same(chain({30, 50, 2}, 4));
  EXPECT_EQ(m.layers()[1].weight, same.layers()[1].weight);
  MlpModel other(chain({30, 50, 2}, 5));
  EXPECT_NE(m.layers()[1].weight, other.layers()[1].weight);
}

TEST(MseLoss, Cases) {
  const std::vector<Point2> a{{1, 2}, {3, 4}};
  EXPECT_EQ(mse_loss(a, a), 0.0);
  const std::vector<Point2> zero{{0, 0}};
  const std::vector<Point2> t{{3, 4}};
  EXPECT_DOUBLE_EQ(mse_loss(zero, t), 25.0);

  Rng rng(10);
  std::vector<Point2> p(5), q(5);
  double sum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    p[i] = {rng.normal(), rng.normal()};
    q[i] = {rng.normal(), rng.normal()};
    sum += (p[i].x - q[i].x) * (p[i].x - q[i].x) + (p[i].y - q[i].y) * (p[i].y - q[i].y);
  }
  EXPECT_NEAR(mse_loss(p, q), sum / 5.0, 1e-12);
  EXPECT_THROW(mse_loss(std::span<const Point2>{}, std::span<const Point2>{}), std::invalid_argument);
  EXPECT_THROW(mse_loss(a, t), std::invalid_argument);
}

TEST(Backward, ZeroUpstreamGradient) {
  MlpModel m(chain({3, 5, 2}, 2));
  const RVec x{0.3, -0.2, 0.9};
  const auto fr = forward(m, x);
  const Gradients g = backward(m, fr.cache, Point2{0.0, 0.0});
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    EXPECT_EQ(g.weight[i].cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.bias[i].cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Backward, SingleLinearLayer) {
  MlpModel m(chain({3, 2}, 6));
  const RVec x{1.5, -0.5, 2.0};
  const Eigen::Vector3d xv(x.data());
  const Eigen::Vector2d t(0.25, -1.0);
  const auto fr = forward(m, x);
  const Eigen::Vector2d resid = m.layers()[0].weight * xv + m.layers()[0].bias - t;
  const Gradients g = backward(m, fr.cache, Point2{2.0 * resid(0), 2.0 * resid(1)});
  const Eigen::MatrixXd expected = 2.0 * resid * xv.transpose();
  EXPECT_LT((g.weight[0] - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((g.bias[0] - 2.0 * resid).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(77);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    MlpModel m(chain({6, 10, 8, 2}, seed));
    for (auto& l : m.mutable_layers()) l.bias = 0.1 * Eigen::VectorXd::Random(l.bias.size());
    RVec x(6);
    for (auto& v : x) v = rng.normal();
    const Eigen::Vector2d t(rng.normal(), rng.normal());
    const auto fr = forward(m, x);
    const Gradients g = backward(m, fr.cache, Point2{2.0 * (fr.y.x - t(0)), 2.0 * (fr.y.y - t(1))});
    const auto report = oracle::fd_check(m, Eigen::Map<const Eigen::VectorXd>(x.data(), 6), t, g,
                                         1e-6, 1e-4, 1e-8);
    EXPECT_EQ(report.failures, 0u) << "seed " << seed;
    EXPECT_GT(report.checked, 150u);
  }
}

TEST(Backward, StaleCacheThrows) {
  MlpModel m(chain({2, 3, 2}));
  const RVec x{1.0, 1.0};
  const auto fr = forward(m, x);
  m.mutable_layers()[0].bias(0) = 1.0;
  try {
    backward(m, fr.cache, Point2{1.0, 1.0});
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("stale cache"), std::string::npos);
  }
  MlpModel other(chain({2, 3, 2}));
  EXPECT_THROW(backward(other, forward(m, x).cache, Point2{1.0, 1.0}), std::invalid_argument);
}

TEST(LearningRate, StepDecay) {
  TrainConfig c;
  c.lr0 = 1e-4;
  c.lr_decay = 0.2;
  c.lr_decay_every = 10;
  EXPECT_EQ(learning_rate(c, 0), 1e-4);
  EXPECT_EQ(learning_rate(c, 9), 1e-4);
  EXPECT_DOUBLE_EQ(learning_rate(c, 10), 8e-5);
  // 1e-4 * 0.8 * 0.8 is one ulp away from the literal 6.4e-5.
  EXPECT_NEAR(learning_rate(c, 25), 6.4e-5, 6.4e-5 * 1e-15);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr_decay = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.lr_decay = 0.2;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

struct Toy {
  std::vector<RVec> x;
  std::vector<Point2> y;
};

Toy toy_data(std::size_t n) {
  Toy d;
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = rng.uniform(-1.0, 1.0);
    d.x.push_back({v});
    d.y.push_back({v, v});
  }
  return d;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.batch_size = 16;
  c.epochs = 200;
  c.lr0 = 3e-3;
  c.lr_decay = 0.2;
  c.lr_decay_every = 50;
  c.shuffle_seed = 12;
  return c;
}

TEST(Train, FitsIdentityOnToyData) {
  const Toy d = toy_data(256);
  const auto r = train(chain({1, 16, 16, 2}, 3), toy_config(), d.x, d.y);
  ASSERT_EQ(r.loss_history.size(), 200u);
  for (double l : r.loss_history) EXPECT_TRUE(std::isfinite(l));
  EXPECT_LT(r.loss_history.back(), 1e-3);
}

TEST(Train, BitDeterministic) {
  const Toy d = toy_data(64);
  TrainConfig c = toy_config();
  c.epochs = 15;
  const auto a = train(chain({1, 8, 2}, 3), c, d.x, d.y);
  const auto b = train(chain({1, 8, 2}, 3), c, d.x, d.y);
  EXPECT_EQ(a.loss_history, b.loss_history);
  for (std::size_t i = 0; i < a.model.layers().size(); ++i) {
    EXPECT_EQ(a.model.layers()[i].weight, b.model.layers()[i].weight);
    EXPECT_EQ(a.model.layers()[i].bias, b.model.layers()[i].bias);
  }
  c.shuffle_seed = 13;
  const auto other = train(chain({1, 8, 2}, 3), c, d.x, d.y);
  EXPECT_NE(a.loss_history, other.loss_history);
}

TEST(Train, DivergenceNamesEpoch) {
  const Toy d = toy_data(64);
  TrainConfig c = toy_config();
  c.optimizer = OptimizerKind::kSgd;
  c.lr0 = 1e6;
  try {
    train(chain({1, 8, 8, 2}, 3), c, d.x, d.y);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("training diverged at epoch " + std::to_string(e.epoch())),
              std::string::npos);
  }
}

TEST(Train, SubsetRestrictsRows) {
  Toy d = toy_data(64);
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < 32; ++i) subset.push_back(i);
  TrainConfig c = toy_config();
  c.epochs = 5;
  const auto a = train(chain({1, 8, 2}, 3), c, d.x, d.y, subset);
  for (std::size_t i = 32; i < 64; ++i) d.y[i] = {NAN, NAN};
  const auto b = train(chain({1, 8, 2}, 3), c, d.x, d.y, subset);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(ParamCount, Cases) {
  EXPECT_EQ(param_count(chain({2, 2})), 6u);
  EXPECT_EQ(param_count(chain({3, 4, 2})), 3u * 4 + 4 + 4 * 2 + 2);
  for (std::size_t m : {4u, 8u, 16u, 32u}) {
    EXPECT_LT(param_count(build_spec(FeatureKind::kCov, m, 2 * m, 10)),
              param_count(build_spec(FeatureKind::kRaw, m, 2 * m, 10)));
  }
}

TEST(ParamCount, DoublingAntennasScalesLeadingTerm) {
  const double cov = double(param_count(build_spec(FeatureKind::kCov, 200, 64, 10))) /
                     double(param_count(build_spec(FeatureKind::kCov, 100, 64, 10)));
  const double cir = double(param_count(build_spec(FeatureKind::kCir, 200, 64, 10))) /
                     double(param_count(build_spec(FeatureKind::kCir, 100, 64, 10)));
  EXPECT_NEAR(cov, 16.0, 16.0 * 0.15);
  EXPECT_NEAR(cir, 4.0, 4.0 * 0.15);
}

TEST(ModelFile, RoundTripIsExact) {
  MlpSpec s = chain({5, 12, 8, 2}, 21);
  s.leaky_slope = 0.05;
  MlpModel m(s);
  for (auto& l : m.mutable_layers()) l.bias = Eigen::VectorXd::Random(l.bias.size());
  const auto path = std::filesystem::temp_directory_path() / "mmloc_model_roundtrip.mlpw";
  save_model(m, path);
  const MlpModel back = load_model(path);
  EXPECT_EQ(back.spec().layers, s.layers);
  EXPECT_EQ(back.spec().leaky_slope, 0.05);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.layers()[i].weight, m.layers()[i].weight);
    EXPECT_EQ(back.layers()[i].bias, m.layers()[i].bias);
  }
  const std::size_t expected_bytes = 4 + 2 + 4 + 3 * 8 + 8 + param_count(s) * 8;
  EXPECT_EQ(std::filesystem::file_size(path), expected_bytes);

  std::ofstream(path, std::ios::binary) << "JUNKJUNK";
  EXPECT_THROW(load_model(path), std::runtime_error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace mmloc
