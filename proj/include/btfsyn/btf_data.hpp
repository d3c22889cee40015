#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "btfsyn/halfdiff.hpp"

namespace btf {

using Index = Eigen::Index;

/// Discretized 6D exemplar: for every direction pair, an RGB image of
/// linear, non-negative reflectance. Layout [pair][row][col][rgb].
struct BtfDataset {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<DirectionPair<float>> pairs;
  std::vector<float> data;

  std::size_t pair_count() const { return pairs.size(); }
  std::size_t texels() const { return std::size_t(width) * height; }

  /// 3 x (width*height) view of one pair's image.
  Eigen::Map<const Eigen::Matrix3Xf> slice(std::size_t pair) const {
    return {data.data() + pair * texels() * 3, 3, Index(texels())};
  }
  Eigen::Map<Eigen::Matrix3Xf> slice(std::size_t pair) {
    return {data.data() + pair * texels() * 3, 3, Index(texels())};
  }

  Eigen::Vector3f at(std::size_t pair, std::uint32_t row, std::uint32_t col) const {
    return slice(pair).col(Index(row) * width + col);
  }

  /// Throws Format on broken invariants (sizes, unit directions, negative or
  /// non-finite reflectance).
  void validate() const;
};

/// Direction grid: n_theta polar rings from 0 to theta_max (inclusive), each
/// with n_phi azimuths at 2*pi*k/n_phi.
std::vector<Eigen::Vector3f> direction_grid(int n_theta, int n_phi, double theta_max_deg);

/// Parameters of the analytic ground-truth generator: Lambertian albedo/pi
/// plus an isotropic GGX lobe with Smith shadowing and Schlick Fresnel.
struct SyntheticBtfSpec {
  std::uint32_t width = 64;
  std::uint32_t height = 64;
  int n_theta = 5;
  int n_phi = 8;
  double theta_max_deg = 75.0;

  // Albedo: a constant, an explicit RGB map (row-major, width*height*3), or
  // periodic value-noise fBm between albedo_min and albedo_max per channel.
  std::optional<Eigen::Vector3f> albedo_constant;
  std::vector<float> albedo_map;
  std::uint64_t albedo_seed = 1;
  Eigen::Vector3f albedo_min{0.15f, 0.12f, 0.10f};
  Eigen::Vector3f albedo_max{0.75f, 0.65f, 0.55f};

  std::uint64_t roughness_seed = 2;
  double roughness_min = 0.25;
  double roughness_max = 0.6;
  double ior = 1.5;
  double specular_weight = 1.0;

  int noise_cells = 4;    // lattice cells across the exemplar at the coarsest octave
  int noise_octaves = 3;

  /// Throws Argument on counts < 1 or roughness outside (0, 1].
  void validate() const;
};

BtfDataset generate_synthetic_btf(const SyntheticBtfSpec& spec);

/// Per-texel roughness used by the generator (row-major).
std::vector<float> synthetic_roughness_map(const SyntheticBtfSpec& spec);
/// Per-texel RGB albedo used by the generator (row-major, interleaved).
std::vector<float> synthetic_albedo_map(const SyntheticBtfSpec& spec);

/// Analytic lobe evaluated for a single texel; exposed for tests.
Eigen::Vector3f synthetic_reflectance(const Eigen::Vector3f& albedo, double roughness, double ior,
                                      double specular_weight, const Eigen::Vector3f& wi,
                                      const Eigen::Vector3f& wo);

enum class DiskScalar : std::uint8_t { F32 = 0, F16 = 1 };

void save_btf(const BtfDataset& dataset, const std::filesystem::path& path,
              DiskScalar scalar = DiskScalar::F32);
BtfDataset load_btf(const std::filesystem::path& path);

/// Byte-level codec behind save_btf/load_btf.
std::vector<std::uint8_t> encode_btf(const BtfDataset& dataset, DiskScalar scalar = DiskScalar::F32);
BtfDataset decode_btf(std::span<const std::uint8_t> bytes);

struct TrainingBatch {
  Eigen::Matrix2Xf uv;
  std::vector<HalfDiffCoords<float>> hd;
  Eigen::Matrix3Xf target;
  std::vector<std::uint32_t> pair_index;  // which pairs were selected, in order
};

/// Chooses direction pairs for training. Stratified mode walks a per-epoch
/// shuffled permutation so that every pair is used once before any repeats.
class PairSampler {
 public:
  PairSampler(std::size_t pair_count, std::uint64_t seed, bool stratified);

  /// `images` distinct pairs. Throws Argument if images > pair_count.
  std::vector<std::uint32_t> next(std::size_t images);

  /// Shuffled order of all pairs for a new epoch.
  std::vector<std::uint32_t> epoch_order();

 private:
  std::size_t count_;
  bool stratified_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
};

/// One batch of every texel of `images` distinct pairs, uv at texel centers.
TrainingBatch sample_batch(const BtfDataset& dataset, std::uint64_t seed, std::size_t images,
                           bool stratified);

/// Reflectance at an arbitrary (uv, wi, wo): bilinear over texels (wrapping)
/// and inverse-distance weighting over the k nearest measured direction pairs.
class DatasetInterpolator {
 public:
  explicit DatasetInterpolator(const BtfDataset& dataset, int k_nearest = 4);
  Eigen::Vector3f operator()(const Eigen::Vector2d& uv, const Eigen::Vector3f& wi,
                             const Eigen::Vector3f& wo) const;

 private:
  const BtfDataset& dataset_;
  int k_;
};

}  // namespace btf
