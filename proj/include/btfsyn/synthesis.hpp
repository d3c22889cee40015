#pragma once

// By-example synthesis over the positional feature plane: Gaussianization,
// triangle- and hex-lattice patch lookups, histogram-preserving blending,
// seamless-tiling preprocessing and offline quilting.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "btfsyn/feature_plane.hpp"
#include "btfsyn/triple_plane.hpp"

namespace btf {

/// Monotone value <-> standard-normal tables for one channel.
struct ChannelLut {
  float value_min = 0.0f;
  float value_max = 0.0f;
  std::vector<float> forward;  // normal value at value_min + k*(max-min)/(L-1)
  std::vector<float> inverse;  // feature value at normal quantile (k+0.5)/L

  float to_normal(float value) const;
  float from_normal(float g) const;
  /// Spacing of the forward table in feature units.
  float forward_bin_width() const;
};

struct GaussianizedExemplar {
  FeaturePlane<float> gauss_plane;
  std::vector<ChannelLut> luts;

  Index lut_size() const { return luts.empty() ? 0 : Index(luts.front().inverse.size()); }
};

inline constexpr Index kDefaultLutSize = 4096;

/// Per channel: texel rank r maps to Phi^-1((r + 0.5) / (W*H)), ties broken
/// by texel order. Constant channels map to 0 with a constant inverse.
GaussianizedExemplar build_gaussianization(const FeaturePlane<float>& plane,
                                           Index lut_size = kDefaultLutSize);

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

enum class SynthesisMode : std::uint8_t { Repeat = 0, HistBlend = 1, HexTile = 2, Quilted = 3 };

struct QuiltedPlane {
  FeaturePlane<float> plane;
  double uv_scale = 1.0;  // exemplar periods covered by the plane along each axis
};

struct SynthesisParams {
  SynthesisMode mode = SynthesisMode::Repeat;
  double grid_scale = 0.25;  // lattice edge in exemplar UV units, (0, 1]
  std::uint64_t seed = 0;
  double hex_exponent = 7.0;  // weight sharpening for hex tiling
  std::shared_ptr<const QuiltedPlane> quilted;

  void validate() const;
};

struct PatchLookup {
  Eigen::Vector2d offset;  // where to fetch in the exemplar (WRAP)
  double weight;
};

using PatchLookups = std::array<PatchLookup, 3>;

/// Random exemplar offset in [0,1)^2 for a lattice vertex.
Eigen::Vector2d vertex_offset(std::int64_t i, std::int64_t j, std::uint64_t seed);

/// Equilateral triangle lattice with edge grid_scale. Weights are the
/// barycentric coordinates of u_star in its triangle.
PatchLookups triangle_grid_lookup(const Eigen::Vector2d& u_star, const SynthesisParams& params);

/// Hexagonal cells centered on the same lattice vertices. Barycentric
/// weights are sharpened by w^k / sum(w^k), which is 1 inside the cell
/// interior near its center and blends only across cell borders.
PatchLookups hex_grid_lookup(const Eigen::Vector2d& u_star, const SynthesisParams& params);

/// g* = sum(w_i G_i) / sqrt(sum(w_i^2)) per channel, mapped back through
/// the inverse LUT.
Eigen::VectorXf blend_features(const GaussianizedExemplar& gex, const PatchLookups& lookups);

/// The Gaussian-space value before the inverse LUT; exposed for tests.
Eigen::VectorXf blend_gaussian(const GaussianizedExemplar& gex, const PatchLookups& lookups);

/// Cross-fades a `border`-texel band at each edge with the half-period
/// translate of the plane (first along u, then along v), so the result
/// wraps without a seam.
FeaturePlane<float> make_tileable(const FeaturePlane<float>& plane, Index border);

/// Border used when synthesis prepares the U plane without an explicit
/// choice: min(width, height) / 25, so 16 texels for a 400-texel plane.
Index default_tileable_border(const FeaturePlane<float>& plane);

/// Mean |row 0 - row H-1| and |col 0 - col W-1| over all channels.
double wrap_seam_delta(const FeaturePlane<float>& plane);

struct QuiltOptions {
  Index block = 32;
  Index overlap = 8;
  double tolerance = 0.1;  // accept candidates within (1 + tolerance) of the best
  Index stride = 1;        // candidate search stride in texels
  std::uint64_t seed = 0;
};

/// Raster-scan quilting with minimum-error boundary cuts.
FeaturePlane<float> quilt_synthesize(const FeaturePlane<float>& plane, Index out_w, Index out_h,
                                     const QuiltOptions& options);

struct SeamPath {
  std::vector<Index> column;  // seam column per row
  double cost = 0.0;
};

/// Minimum-cost top-to-bottom path through an error surface (rows x cols),
/// moving at most one column per row. Ties go to the leftmost column.
SeamPath minimum_vertical_seam(const Eigen::MatrixXd& error);

struct StorageEstimate {
  std::uint64_t positional_bytes = 0;   // U plane, or the pre-generated quilted plane
  std::uint64_t directional_bytes = 0;  // H and D planes
  std::uint64_t decoder_bytes = 0;      // MLP parameters
  std::uint64_t plane_bytes() const { return positional_bytes + directional_bytes; }
  std::uint64_t total() const { return plane_bytes() + decoder_bytes; }
};

/// Dynamic modes need only the checkpoint. Quilted mode replaces the
/// exemplar U plane with one covering uv_scale periods per axis.
/// Throws Argument if uv_scale < 1.
StorageEstimate storage_estimate(const ModelShape& shape, SynthesisMode mode, double uv_scale);

/// Bytes of the pre-generated quilted positional plane alone.
std::uint64_t quilted_plane_bytes(const ModelShape& shape, double uv_scale);

/// Positional feature at u_star under the given synthesis mode.
Eigen::VectorXf synthesize_feature(const FeaturePlane<float>& plane_u, const GaussianizedExemplar* gex,
                                   const SynthesisParams& params, const Eigen::Vector2d& u_star);

}  // namespace btf
