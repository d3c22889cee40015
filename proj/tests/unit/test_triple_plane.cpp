#include <gtest/gtest.h>

#include <random>

#include "btfsyn/triple_plane.hpp"

using namespace btf;

namespace {

ModelShape small_shape() {
  ModelShape s;
  s.u_width = s.u_height = 8;
  s.dir_width = s.dir_height = 4;
  return s;
}

SampleBatch<double> random_batch(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SampleBatch<double> b;
  b.resize(n);
  for (Index i = 0; i < n; ++i) {
    b.uv.col(i) << u(rng), u(rng);
    b.uv_h.col(i) << u(rng), u(rng);
    b.uv_d.col(i) << u(rng), u(rng);
    b.target.col(i) << u(rng), u(rng), u(rng);
  }
  return b;
}

double batch_l1(const TriplePlaneModel<double>& m, const SampleBatch<double>& b) {
  double total = 0.0;
  for (Index i = 0; i < b.size(); ++i) {
    PlaneCoords<double> dir{b.uv_h.col(i), b.uv_d.col(i)};
    total += (m.decode(b.uv.col(i), dir) - b.target.col(i)).cwiseAbs().sum();
  }
  return total;
}

}  // namespace

TEST(TriplePlane, DefaultShapeAndBytes) {
  const ModelShape s;
  EXPECT_EQ(s.u_width, 400);
  EXPECT_EQ(s.u_channels, 16);
  EXPECT_EQ(s.dir_width, 20);
  EXPECT_EQ(s.dir_channels, 8);
  EXPECT_EQ(s.input_dim(), 32);
  EXPECT_EQ(s.mlp_dims(), default_mlp_dims());
  EXPECT_EQ(s.plane_bytes(), 10'265'600u);
}

TEST(TriplePlane, CreateSetsAddressing) {
  const auto m = TriplePlaneModel<float>::create(small_shape(), 1);
  EXPECT_EQ(m.plane_u.wrap_u(), AddressMode::Wrap);
  EXPECT_EQ(m.plane_u.wrap_v(), AddressMode::Wrap);
  EXPECT_EQ(m.plane_h.wrap_u(), AddressMode::Clamp);
  EXPECT_EQ(m.plane_h.wrap_v(), AddressMode::Wrap);
  EXPECT_EQ(m.plane_d.wrap_u(), AddressMode::Clamp);
  EXPECT_EQ(m.plane_d.wrap_v(), AddressMode::Wrap);
  EXPECT_NO_THROW(m.validate());
  EXPECT_TRUE(m.all_finite());
}

TEST(TriplePlane, CreateIsDeterministic) {
  const auto a = TriplePlaneModel<float>::create(small_shape(), 9);
  const auto b = TriplePlaneModel<float>::create(small_shape(), 9);
  EXPECT_EQ(a.plane_u.data(), b.plane_u.data());
  EXPECT_EQ(a.mlp.weights[2], b.mlp.weights[2]);
}

TEST(TriplePlane, ValidateRejectsChannelMismatch) {
  auto m = TriplePlaneModel<float>::create(small_shape(), 1);
  m.plane_d = FeaturePlane<float>(4, 4, 7, AddressMode::Clamp, AddressMode::Wrap);
  EXPECT_THROW(m.validate(), Error);
}

TEST(LossL1, Examples) {
  Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Random(3, 10);
  EXPECT_EQ(loss_l1<double>(a, a), 0.0);
  EXPECT_NEAR(loss_l1<double>(a.array() + 0.25, a), 0.25, 1e-15);
  EXPECT_NEAR(loss_l1<double>(a.array() - 0.5, a), 0.5, 1e-15);
  EXPECT_THROW(loss_l1<double>(a, a.leftCols(9)), Error);
}

TEST(LossL1, MatchesSummationOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Eigen::Matrix3Xf a(3, 1000), b(3, 1000);
  for (Index i = 0; i < a.size(); ++i) {
    a.data()[i] = u(rng);
    b.data()[i] = u(rng);
  }
  // Pairwise-compensated double accumulation in reverse order.
  double sum = 0.0, comp = 0.0;
  for (Index i = a.size() - 1; i >= 0; --i) {
    const double y = std::abs(double(a.data()[i]) - double(b.data()[i])) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  EXPECT_NEAR(loss_l1<float>(a, b), sum / double(a.size()), 1e-7);
}

TEST(TriplePlane, BatchedForwardMatchesSingleDecode) {
  const auto m = TriplePlaneModel<double>::create(small_shape(), 4);
  const auto b = random_batch(20, 5);
  auto grads = ModelGradients<double>::zeros_like(m);
  const double sum = l1_forward_backward(m, b, 1.0, grads);
  EXPECT_NEAR(sum, batch_l1(m, b), 1e-12);
}

TEST(TriplePlane, GradientsMatchFiniteDifferences) {
  auto m = TriplePlaneModel<double>::create(small_shape(), 6);
  // Larger features than the default init so the decoder is well inside its nonlinear regime.
  m.plane_u.data() *= 50.0;
  m.plane_h.data() *= 20.0;
  m.plane_d.data() *= 20.0;
  const auto b = random_batch(64, 7);
  auto grads = ModelGradients<double>::zeros_like(m);
  l1_forward_backward(m, b, 1.0, grads);

  const double h = 1e-5;
  int checked = 0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = batch_l1(m, b);
    param = keep - h;
    const double down = batch_l1(m, b);
    param = keep;
    const double fd = (up - down) / (2 * h);
    EXPECT_LE(std::abs(fd - analytic), 1e-4 * std::max(1.0, std::abs(fd)));
    ++checked;
  };
  for (Index i = 0; i < m.plane_u.data().size(); ++i) check(m.plane_u.data().data()[i], grads.plane_u.data()[i]);
  for (Index i = 0; i < m.plane_h.data().size(); ++i) check(m.plane_h.data().data()[i], grads.plane_h.data()[i]);
  for (Index i = 0; i < m.plane_d.data().size(); ++i) check(m.plane_d.data().data()[i], grads.plane_d.data()[i]);
  for (std::size_t k = 0; k < m.mlp.layer_count(); ++k) {
    for (Index i = 0; i < m.mlp.weights[k].size(); ++i)
      check(m.mlp.weights[k].data()[i], grads.mlp.weights[k].data()[i]);
    for (Index i = 0; i < m.mlp.biases[k].size(); ++i) check(m.mlp.biases[k].data()[i], grads.mlp.biases[k].data()[i]);
  }
  EXPECT_GT(checked, 1000);
}

TEST(TriplePlane, GradScaleIsLinear) {
  const auto m = TriplePlaneModel<double>::create(small_shape(), 8);
  const auto b = random_batch(10, 9);
  auto g1 = ModelGradients<double>::zeros_like(m);
  auto g2 = ModelGradients<double>::zeros_like(m);
  l1_forward_backward(m, b, 1.0, g1);
  l1_forward_backward(m, b, 0.5, g2);
  EXPECT_LT((g1.plane_u * 0.5 - g2.plane_u).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((g1.mlp.weights[0] * 0.5 - g2.mlp.weights[0]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TriplePlane, Log1pOutputSpace) {
  auto m = TriplePlaneModel<double>::create(small_shape(), 10);
  const PlaneCoords<double> dir{Eigen::Vector2d(0.2, 0.3), Eigen::Vector2d(0.4, 0.5)};
  const Eigen::Vector2d uv(0.1, 0.9);
  const Eigen::Vector3d raw = m.decode(uv, dir);
  m.output_space = OutputSpace::Log1p;
  EXPECT_LT((m.decode(uv, dir) - raw.array().exp().matrix() + Eigen::Vector3d::Ones()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TriplePlane, CastRoundTrip) {
  const auto m = TriplePlaneModel<float>::create(small_shape(), 11);
  const auto back = m.cast<double>().cast<float>();
  EXPECT_EQ(back.plane_u.data(), m.plane_u.data());
  EXPECT_EQ(back.mlp.weights[3], m.mlp.weights[3]);
  EXPECT_EQ(back.plane_h.wrap_u(), AddressMode::Clamp);
}
