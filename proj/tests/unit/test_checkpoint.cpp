#include <gtest/gtest.h>

#include <cstring>

#include "btfsyn/checkpoint.hpp"
#include "test_util.hpp"

using namespace btf;
using btf::testing::error_kind;
using btf::testing::TempFile;

namespace {

ModelShape tiny_shape() {
  ModelShape s;
  s.u_width = 6;
  s.u_height = 5;
  s.u_channels = 4;
  s.dir_width = 3;
  s.dir_height = 4;
  s.dir_channels = 2;
  s.hidden = {5, 7};
  return s;
}

bool same_bits(const Eigen::MatrixXf& a, const Eigen::MatrixXf& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), std::size_t(a.size()) * sizeof(float)) == 0;
}

void expect_same_model(const TriplePlaneModel<float>& a, const TriplePlaneModel<float>& b) {
  EXPECT_TRUE(same_bits(a.plane_u.data(), b.plane_u.data()));
  EXPECT_TRUE(same_bits(a.plane_h.data(), b.plane_h.data()));
  EXPECT_TRUE(same_bits(a.plane_d.data(), b.plane_d.data()));
  EXPECT_EQ(a.plane_u.wrap_u(), b.plane_u.wrap_u());
  EXPECT_EQ(a.plane_h.wrap_u(), b.plane_h.wrap_u());
  EXPECT_EQ(a.plane_h.wrap_v(), b.plane_h.wrap_v());
  ASSERT_EQ(a.mlp.layer_count(), b.mlp.layer_count());
  for (std::size_t k = 0; k < a.mlp.layer_count(); ++k) {
    EXPECT_TRUE(same_bits(a.mlp.weights[k], b.mlp.weights[k]));
    EXPECT_TRUE(same_bits(a.mlp.biases[k], b.mlp.biases[k]));
  }
  EXPECT_EQ(a.mlp.leaky_slope, b.mlp.leaky_slope);
  EXPECT_EQ(a.mlp.output_activation, b.mlp.output_activation);
  EXPECT_EQ(a.output_space, b.output_space);
}

}  // namespace

TEST(Checkpoint, ModelRoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Checkpoint c{TriplePlaneModel<float>::create(tiny_shape(), seed, 0.02f), {}, {}, {}};
    c.model.output_space = seed % 2 ? OutputSpace::Log1p : OutputSpace::Linear;
    c.model.mlp.output_activation = seed % 3 == 0;
    const auto back = decode_checkpoint(encode_checkpoint(c));
    expect_same_model(c.model, back.model);
    EXPECT_FALSE(back.gaussianization);
    EXPECT_FALSE(back.quilted);
    EXPECT_FALSE(back.trainer);
  }
}

TEST(Checkpoint, BlocksRoundTrip) {
  Checkpoint c{TriplePlaneModel<float>::create(tiny_shape(), 3), {}, {}, {}};
  c.gaussianization = build_gaussianization(c.model.plane_u, 64);
  auto q = std::make_shared<QuiltedPlane>();
  q->plane = FeaturePlane<float>(12, 10, 4, AddressMode::Wrap, AddressMode::Wrap);
  q->plane.data().setRandom();
  q->uv_scale = 2.0;
  c.quilted = q;
  TrainerState t;
  t.epochs_completed = 7;
  t.adam.step = 123;
  t.adam.m.push_back(Eigen::ArrayXf::Random(9));
  t.adam.v.push_back(Eigen::ArrayXf::Random(9).abs());
  c.trainer = t;

  const TempFile file("ckpt.tpln");
  save_checkpoint(c, file.path());
  const auto back = load_checkpoint(file.path());
  expect_same_model(c.model, back.model);

  ASSERT_TRUE(back.gaussianization);
  EXPECT_TRUE(same_bits(back.gaussianization->gauss_plane.data(), c.gaussianization->gauss_plane.data()));
  ASSERT_EQ(back.gaussianization->luts.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(back.gaussianization->luts[k].forward, c.gaussianization->luts[k].forward);
    EXPECT_EQ(back.gaussianization->luts[k].inverse, c.gaussianization->luts[k].inverse);
    EXPECT_EQ(back.gaussianization->luts[k].value_min, c.gaussianization->luts[k].value_min);
    EXPECT_EQ(back.gaussianization->luts[k].value_max, c.gaussianization->luts[k].value_max);
  }

  ASSERT_TRUE(back.quilted);
  EXPECT_EQ(back.quilted->uv_scale, 2.0);
  EXPECT_TRUE(same_bits(back.quilted->plane.data(), q->plane.data()));

  ASSERT_TRUE(back.trainer);
  EXPECT_EQ(back.trainer->epochs_completed, 7u);
  EXPECT_EQ(back.trainer->adam.step, 123);
  ASSERT_EQ(back.trainer->adam.m.size(), 1u);
  EXPECT_TRUE((back.trainer->adam.m[0] == t.adam.m[0]).all());
  EXPECT_TRUE((back.trainer->adam.v[0] == t.adam.v[0]).all());
}

TEST(Checkpoint, UnknownBlockIsSkipped) {
  Checkpoint c{TriplePlaneModel<float>::create(tiny_shape(), 4), {}, {}, {}};
  auto bytes = encode_checkpoint(c);
  // Last four bytes are block_count = 0; replace with one foreign block.
  bytes.resize(bytes.size() - 4);
  const std::uint8_t block[] = {1, 0, 0, 0, 'X', 'T', 'R', 'A', 3, 0, 0, 0, 0, 0, 0, 0, 9, 9, 9};
  bytes.insert(bytes.end(), std::begin(block), std::end(block));
  const auto back = decode_checkpoint(bytes);
  expect_same_model(c.model, back.model);
}

TEST(Checkpoint, Errors) {
  Checkpoint c{TriplePlaneModel<float>::create(tiny_shape(), 5), {}, {}, {}};
  const auto good = encode_checkpoint(c);

  auto bytes = good;
  bytes[0] = 'Q';
  EXPECT_EQ(error_kind([&] { decode_checkpoint(bytes); }), ErrorKind::Format);

  bytes = good;
  bytes[4] = 9;
  EXPECT_EQ(error_kind([&] { decode_checkpoint(bytes); }), ErrorKind::Version);

  bytes = good;
  bytes.resize(bytes.size() / 2);
  EXPECT_EQ(error_kind([&] { decode_checkpoint(bytes); }), ErrorKind::Corruption);

  bytes = good;
  bytes.push_back(1);
  EXPECT_EQ(error_kind([&] { decode_checkpoint(bytes); }), ErrorKind::Corruption);

  EXPECT_EQ(error_kind([] { load_checkpoint("/nonexistent/x.tpln"); }), ErrorKind::Io);
}

TEST(Checkpoint, ChannelMismatchIsFormatError) {
  Checkpoint c{TriplePlaneModel<float>::create(tiny_shape(), 6), {}, {}, {}};
  c.model.plane_u = FeaturePlane<float>(6, 5, 3, AddressMode::Wrap, AddressMode::Wrap);
  EXPECT_EQ(error_kind([&] { decode_checkpoint(encode_checkpoint(c)); }), ErrorKind::Format);
}

TEST(Checkpoint, StandalonePlaneFile) {
  FeaturePlane<float> p(7, 3, 5, AddressMode::Clamp, AddressMode::Wrap);
  p.data().setRandom();
  const TempFile file("plane.fpln");
  save_plane(p, file.path());
  const auto back = load_plane(file.path());
  EXPECT_EQ(back.width(), 7);
  EXPECT_EQ(back.height(), 3);
  EXPECT_EQ(back.wrap_u(), AddressMode::Clamp);
  EXPECT_EQ(back.wrap_v(), AddressMode::Wrap);
  EXPECT_TRUE(same_bits(back.data(), p.data()));
}
