#include <gtest/gtest.h>

#include <cstring>
#include <numbers>
#include <random>
#include <set>

#include "btfsyn/btf_data.hpp"
#include "test_util.hpp"

using namespace btf;
using btf::testing::error_kind;
using btf::testing::TempFile;

namespace {

SyntheticBtfSpec small_spec() {
  SyntheticBtfSpec s;
  s.width = 8;
  s.height = 6;
  s.n_theta = 3;
  s.n_phi = 4;
  return s;
}

BtfDataset random_dataset(std::uint32_t w, std::uint32_t h, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  BtfDataset d;
  d.width = w;
  d.height = h;
  for (std::size_t p = 0; p < n; ++p) {
    const auto a = cosine_sample_hemisphere(double(u(rng)) * 0.9, double(u(rng))).direction;
    const auto b = cosine_sample_hemisphere(double(u(rng)) * 0.9, double(u(rng))).direction;
    d.pairs.push_back({a.cast<float>().normalized(), b.cast<float>().normalized()});
  }
  d.data.resize(n * w * h * 3);
  for (auto& v : d.data) v = u(rng) * 4.0f;
  return d;
}

}  // namespace

TEST(Synthetic, ConstantAlbedoWithoutSpecularIsLambertian) {
  auto s = small_spec();
  s.specular_weight = 0.0;
  s.albedo_constant = Eigen::Vector3f(0.2f, 0.5f, 0.8f);
  const auto d = generate_synthetic_btf(s);
  EXPECT_EQ(d.pair_count(), 12u * 12u);
  for (std::size_t p = 0; p < d.pair_count(); ++p) {
    for (std::uint32_t r = 0; r < d.height; ++r) {
      for (std::uint32_t c = 0; c < d.width; ++c) {
        const auto v = d.at(p, r, c);
        EXPECT_FLOAT_EQ(v(0), float(0.2f / std::numbers::pi));
        EXPECT_FLOAT_EQ(v(1), float(0.5f / std::numbers::pi));
        EXPECT_FLOAT_EQ(v(2), float(0.8f / std::numbers::pi));
      }
    }
  }
}

TEST(Synthetic, AlbedoMapAtNormalIncidence) {
  auto s = small_spec();
  s.specular_weight = 0.0;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  s.albedo_map.resize(std::size_t(s.width) * s.height * 3);
  for (auto& v : s.albedo_map) v = u(rng);
  const auto d = generate_synthetic_btf(s);
  // Pair 0 is (theta 0, theta 0).
  ASSERT_TRUE(d.pairs[0].wi.isApprox(Eigen::Vector3f::UnitZ()));
  ASSERT_TRUE(d.pairs[0].wo.isApprox(Eigen::Vector3f::UnitZ()));
  for (std::size_t t = 0; t < d.texels(); ++t) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_FLOAT_EQ(d.data[t * 3 + std::size_t(c)], float(s.albedo_map[t * 3 + std::size_t(c)] / std::numbers::pi));
    }
  }
}

TEST(Synthetic, SpecularPeakAtMirrorDirection) {
  auto s = small_spec();
  s.n_theta = 5;
  s.n_phi = 8;
  s.albedo_constant = Eigen::Vector3f::Zero();
  s.roughness_min = s.roughness_max = 0.15;
  const auto d = generate_synthetic_btf(s);
  const auto grid = direction_grid(s.n_theta, s.n_phi, s.theta_max_deg);
  const std::size_t n = grid.size();
  for (std::size_t i = 1; i < n; ++i) {
    const Eigen::Vector3f& wi = grid[i];
    const Eigen::Vector3f mirror(-wi.x(), -wi.y(), wi.z());
    std::size_t nearest = 0, best = 0;
    for (std::size_t o = 0; o < n; ++o) {
      if (grid[o].dot(mirror) > grid[nearest].dot(mirror)) nearest = o;
      if (d.at(i * n + o, 2, 3)(0) > d.at(i * n + best, 2, 3)(0)) best = o;
    }
    EXPECT_EQ(best, nearest) << "wi index " << i;
  }
}

TEST(Synthetic, LambertianIsReciprocal) {
  auto s = small_spec();
  s.specular_weight = 0.0;
  const auto d = generate_synthetic_btf(s);
  const std::size_t n = std::size_t(s.n_theta * s.n_phi);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < n; ++o) {
      const auto a = d.slice(i * n + o);
      const auto b = d.slice(o * n + i);
      EXPECT_EQ(a, b);
    }
  }
}

TEST(Synthetic, DeterministicAndValid) {
  const auto a = generate_synthetic_btf(small_spec());
  const auto b = generate_synthetic_btf(small_spec());
  EXPECT_EQ(a.data, b.data);
  EXPECT_NO_THROW(a.validate());
  auto s = small_spec();
  s.albedo_seed = 77;
  EXPECT_NE(generate_synthetic_btf(s).data, a.data);
}

TEST(Synthetic, SpecInvariants) {
  auto s = small_spec();
  s.roughness_max = 1.5;
  EXPECT_EQ(error_kind([&] { generate_synthetic_btf(s); }), ErrorKind::Argument);
  s = small_spec();
  s.n_phi = 0;
  EXPECT_EQ(error_kind([&] { generate_synthetic_btf(s); }), ErrorKind::Argument);
  s = small_spec();
  s.roughness_min = 0.0;
  EXPECT_EQ(error_kind([&] { generate_synthetic_btf(s); }), ErrorKind::Argument);
}

TEST(DirectionGrid, ThetaRangeAndUnitLength) {
  const auto g = direction_grid(5, 8, 75.0);
  ASSERT_EQ(g.size(), 40u);
  for (const auto& d : g) {
    EXPECT_NEAR(d.norm(), 1.0f, 1e-6f);
    EXPECT_GE(d.z(), std::cos(75.0 * std::numbers::pi / 180.0) - 1e-6);
  }
  EXPECT_NEAR(std::acos(double(g.back().z())) * 180.0 / std::numbers::pi, 75.0, 1e-4);
}

TEST(BtfFile, RoundTripSmall) {
  const auto d = random_dataset(2, 2, 1, 3);
  const TempFile file("small.btf");
  save_btf(d, file.path());
  const auto back = load_btf(file.path());
  EXPECT_EQ(back.width, 2u);
  EXPECT_EQ(back.height, 2u);
  EXPECT_EQ(back.data, d.data);
  EXPECT_EQ(back.pairs[0].wi, d.pairs[0].wi);
  EXPECT_EQ(back.pairs[0].wo, d.pairs[0].wo);
}

TEST(BtfFile, RoundTripIsBitExactProperty) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::mt19937_64 rng(seed);
    const auto d = random_dataset(1 + rng() % 7, 1 + rng() % 5, 1 + rng() % 6, seed);
    const auto back = decode_btf(encode_btf(d));
    ASSERT_EQ(back.data.size(), d.data.size());
    EXPECT_EQ(std::memcmp(back.data.data(), d.data.data(), d.data.size() * 4), 0);
    for (std::size_t p = 0; p < d.pair_count(); ++p) {
      EXPECT_EQ(back.pairs[p].wi, d.pairs[p].wi);
      EXPECT_EQ(back.pairs[p].wo, d.pairs[p].wo);
    }
  }
}

TEST(BtfFile, HalfPrecisionPayload) {
  const auto d = random_dataset(3, 2, 2, 4);
  const auto bytes = encode_btf(d, DiskScalar::F16);
  EXPECT_EQ(bytes.size(), 4 + 4 * 4 + 4 + 2 * 24 + d.data.size() * 2);
  const auto back = decode_btf(bytes);
  for (std::size_t i = 0; i < d.data.size(); ++i) EXPECT_NEAR(back.data[i], d.data[i], d.data[i] * 1e-3f + 1e-7f);
}

TEST(BtfFile, BadMagicIsFormatError) {
  auto bytes = encode_btf(random_dataset(2, 2, 1, 5));
  bytes[0] = 'X';
  bytes[1] = 'X';
  bytes[2] = 'X';
  bytes[3] = 'X';
  EXPECT_EQ(error_kind([&] { decode_btf(bytes); }), ErrorKind::Format);
}

TEST(BtfFile, TruncatedPayloadIsCorruption) {
  const auto d4 = random_dataset(2, 2, 4, 6);
  auto bytes = encode_btf(d4);
  // Header says 4 pairs but only three images of payload follow.
  bytes.resize(bytes.size() - 2 * 2 * 3 * 4);
  EXPECT_EQ(error_kind([&] { decode_btf(bytes); }), ErrorKind::Corruption);
}

TEST(BtfFile, TrailingBytesAreCorruption) {
  auto bytes = encode_btf(random_dataset(2, 2, 1, 7));
  bytes.push_back(0);
  EXPECT_EQ(error_kind([&] { decode_btf(bytes); }), ErrorKind::Corruption);
}

TEST(BtfFile, VersionMismatch) {
  auto bytes = encode_btf(random_dataset(2, 2, 1, 8));
  bytes[4] = 2;
  EXPECT_EQ(error_kind([&] { decode_btf(bytes); }), ErrorKind::Version);
}

TEST(BtfFile, MissingFileIsIoError) {
  EXPECT_EQ(error_kind([] { load_btf("/nonexistent/dir/file.btf"); }), ErrorKind::Io);
}

TEST(BtfDataset, ValidateRejectsBrokenInvariants) {
  auto d = random_dataset(2, 2, 2, 9);
  d.data[3] = -1.0f;
  EXPECT_EQ(error_kind([&] { d.validate(); }), ErrorKind::Format);
  d = random_dataset(2, 2, 2, 9);
  d.pairs[1].wo = Eigen::Vector3f(0, 0, -1);
  EXPECT_EQ(error_kind([&] { d.validate(); }), ErrorKind::Format);
  d = random_dataset(2, 2, 2, 9);
  d.data.pop_back();
  EXPECT_EQ(error_kind([&] { d.validate(); }), ErrorKind::Format);
}

TEST(SampleBatch, FullSizeBatchLength) {
  // 16 images of a 400x400 exemplar.
  BtfDataset d;
  d.width = d.height = 400;
  const auto grid = direction_grid(2, 8, 60.0);
  for (const auto& wi : grid) d.pairs.push_back({wi, grid[0]});
  d.data.assign(d.pair_count() * d.texels() * 3, 0.5f);
  const auto b = sample_batch(d, 1, 16, true);
  EXPECT_EQ(b.uv.cols(), 2'560'000);
  EXPECT_EQ(b.target.cols(), 2'560'000);
  EXPECT_EQ(b.hd.size(), 2'560'000u);
}

TEST(SampleBatch, AllPairsCoverEveryTexelOnce) {
  const auto d = random_dataset(5, 3, 6, 10);
  const auto b = sample_batch(d, 2, 6, false);
  std::set<std::uint32_t> pairs(b.pair_index.begin(), b.pair_index.end());
  EXPECT_EQ(pairs.size(), 6u);
  std::set<std::tuple<std::uint32_t, float, float>> seen;
  for (Index k = 0; k < b.uv.cols(); ++k) {
    const std::uint32_t p = b.pair_index[std::size_t(k / 15)];
    seen.insert({p, b.uv(0, k), b.uv(1, k)});
    const auto col = std::uint32_t(std::lround(b.uv(0, k) * 5 - 0.5f));
    const auto row = std::uint32_t(std::lround(b.uv(1, k) * 3 - 0.5f));
    EXPECT_EQ(b.target.col(k), d.at(p, row, col));
  }
  EXPECT_EQ(seen.size(), 6u * 15u);
}

TEST(SampleBatch, TexelCentersAndDeterminism) {
  const auto d = random_dataset(4, 4, 10, 11);
  const auto a = sample_batch(d, 5, 3, true);
  const auto b = sample_batch(d, 5, 3, true);
  EXPECT_EQ(a.pair_index, b.pair_index);
  EXPECT_EQ(a.uv, b.uv);
  EXPECT_FLOAT_EQ(a.uv(0, 0), 0.125f);
  EXPECT_FLOAT_EQ(a.uv(0, 1), 0.375f);
  EXPECT_FLOAT_EQ(a.uv(1, 4), 0.375f);
}

TEST(SampleBatch, TooManyImagesIsArgumentError) {
  const auto d = random_dataset(2, 2, 3, 12);
  EXPECT_EQ(error_kind([&] { sample_batch(d, 0, 4, true); }), ErrorKind::Argument);
}

TEST(PairSampler, StratifiedCoversAllPairsBeforeRepeating) {
  for (std::size_t images : {1u, 3u, 4u, 7u}) {
    PairSampler s(10, 99, true);
    std::vector<std::uint32_t> stream;
    for (int b = 0; b < 30; ++b) {
      const auto batch = s.next(images);
      const std::set<std::uint32_t> distinct(batch.begin(), batch.end());
      EXPECT_EQ(distinct.size(), images);
      stream.insert(stream.end(), batch.begin(), batch.end());
    }
    // The first 10 draws are a permutation of all pairs.
    const std::set<std::uint32_t> first(stream.begin(), stream.begin() + 10);
    EXPECT_EQ(first.size(), 10u);
  }
}

TEST(DatasetInterpolator, ExactAtMeasuredSamples) {
  const auto d = random_dataset(4, 3, 5, 13);
  const DatasetInterpolator interp(d);
  for (std::size_t p = 0; p < d.pair_count(); ++p) {
    for (std::uint32_t r = 0; r < 3; ++r) {
      for (std::uint32_t c = 0; c < 4; ++c) {
        const Eigen::Vector2d uv((c + 0.5) / 4.0, (r + 0.5) / 3.0);
        EXPECT_LT((interp(uv, d.pairs[p].wi, d.pairs[p].wo) - d.at(p, r, c)).cwiseAbs().maxCoeff(), 1e-5f);
      }
    }
  }
}
