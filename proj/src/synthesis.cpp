#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "btfsyn/error.hpp"
#include "btfsyn/hash.hpp"
#include "btfsyn/synthesis.hpp"

namespace btf {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::Argument, "normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

float lerp_table(const std::vector<float>& table, double pos) {
  const double last = double(table.size() - 1);
  pos = std::clamp(pos, 0.0, last);
  const auto i = std::size_t(pos);
  if (i + 1 >= table.size()) return table.back();
  const double t = pos - double(i);
  return float(table[i] + t * (double(table[i + 1]) - double(table[i])));
}

}  // namespace

float ChannelLut::to_normal(float value) const {
  if (!(value_max > value_min)) return 0.0f;
  const double t = (double(value) - value_min) / (double(value_max) - value_min);
  return lerp_table(forward, t * double(forward.size() - 1));
}

float ChannelLut::from_normal(float g) const {
  const double p = normal_cdf(g);
  return lerp_table(inverse, p * double(inverse.size()) - 0.5);
}

float ChannelLut::forward_bin_width() const {
  return forward.size() < 2 ? 0.0f : (value_max - value_min) / float(forward.size() - 1);
}

GaussianizedExemplar build_gaussianization(const FeaturePlane<float>& plane, Index lut_size) {
  if (lut_size < 2) throw Error(ErrorKind::Argument, "build_gaussianization: LUT size must be >= 2");
  if (!plane.all_finite()) throw Error(ErrorKind::Argument, "build_gaussianization: non-finite plane");
  const Index n = plane.texel_count();
  GaussianizedExemplar gex;
  gex.gauss_plane = FeaturePlane<float>(plane.width(), plane.height(), plane.channels(), plane.wrap_u(),
                                        plane.wrap_v());
  std::vector<double> rank_normal(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) rank_normal[std::size_t(r)] = normal_quantile((double(r) + 0.5) / double(n));

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index c = 0; c < plane.channels(); ++c) {
    const auto values = plane.data().row(c);
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });

    ChannelLut lut;
    lut.value_min = values(order.front());
    lut.value_max = values(order.back());
    lut.inverse.resize(std::size_t(lut_size));
    lut.forward.resize(std::size_t(lut_size));

    if (!(lut.value_max > lut.value_min)) {
      gex.gauss_plane.data().row(c).setZero();
      std::fill(lut.inverse.begin(), lut.inverse.end(), lut.value_min);
      std::fill(lut.forward.begin(), lut.forward.end(), 0.0f);
      gex.luts.push_back(std::move(lut));
      continue;
    }

    std::vector<float> sorted(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r) {
      sorted[std::size_t(r)] = values(order[std::size_t(r)]);
      gex.gauss_plane.data()(c, order[std::size_t(r)]) = float(rank_normal[std::size_t(r)]);
    }

    // Distinct values with the mean normal of their tied ranks.
    std::vector<double> knot_value;
    std::vector<double> knot_normal;
    for (std::size_t r = 0; r < sorted.size();) {
      std::size_t e = r;
      double acc = 0.0;
      while (e < sorted.size() && sorted[e] == sorted[r]) acc += rank_normal[e++];
      knot_value.push_back(sorted[r]);
      knot_normal.push_back(acc / double(e - r));
      r = e;
    }
    for (Index k = 0; k < lut_size; ++k) {
      const double x = lut.value_min + (double(lut.value_max) - lut.value_min) * double(k) / double(lut_size - 1);
      const auto it = std::lower_bound(knot_value.begin(), knot_value.end(), x);
      double g;
      if (it == knot_value.begin()) {
        g = knot_normal.front();
      } else if (it == knot_value.end()) {
        g = knot_normal.back();
      } else {
        const auto i = std::size_t(it - knot_value.begin());
        const double t = (x - knot_value[i - 1]) / (knot_value[i] - knot_value[i - 1]);
        g = knot_normal[i - 1] + t * (knot_normal[i] - knot_normal[i - 1]);
      }
      lut.forward[std::size_t(k)] = float(g);
    }

    // Monotone inverse of the forward polyline at the normal quantiles.
    const double step = (double(lut.value_max) - lut.value_min) / double(lut_size - 1);
    for (Index k = 0; k < lut_size; ++k) {
      const float g = float(normal_quantile((double(k) + 0.5) / double(lut_size)));
      const auto it = std::lower_bound(lut.forward.begin(), lut.forward.end(), g);
      const auto i = std::size_t(it - lut.forward.begin());
      double x;
      if (i == 0) {
        x = lut.value_min;
      } else if (i == lut.forward.size()) {
        x = lut.value_max;
      } else {
        const double t = (double(g) - lut.forward[i - 1]) / (double(lut.forward[i]) - lut.forward[i - 1]);
        x = lut.value_min + step * (double(i - 1) + t);
      }
      lut.inverse[std::size_t(k)] = float(x);
    }
    gex.luts.push_back(std::move(lut));
  }
  return gex;
}

void SynthesisParams::validate() const {
  if (!(grid_scale > 0.0 && grid_scale <= 1.0)) {
    throw Error(ErrorKind::Argument, "SynthesisParams: grid_scale must lie in (0, 1]");
  }
  if (!(hex_exponent >= 1.0)) throw Error(ErrorKind::Argument, "SynthesisParams: hex_exponent must be >= 1");
  if (mode == SynthesisMode::Quilted && !quilted) {
    throw Error(ErrorKind::Configuration, "SynthesisParams: quilted mode requires a quilted plane");
  }
}

Eigen::Vector2d vertex_offset(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  const std::uint64_t h = lattice_hash(i, j, seed);
  return {to_unit(h), to_unit(mix64(h))};
}

PatchLookups triangle_grid_lookup(const Eigen::Vector2d& u_star, const SynthesisParams& params) {
  constexpr double inv_sqrt3 = std::numbers::inv_sqrt3;
  const Eigen::Vector2d s = u_star / params.grid_scale;
  const Eigen::Vector2d skewed(s.x() - s.y() * inv_sqrt3, 2.0 * s.y() * inv_sqrt3);
  const Eigen::Vector2d base = skewed.array().floor();
  const Eigen::Vector2d f = skewed - base;
  const double fz = 1.0 - f.x() - f.y();
  const auto bi = std::int64_t(base.x());
  const auto bj = std::int64_t(base.y());

  std::array<std::array<std::int64_t, 2>, 3> v;
  std::array<double, 3> w;
  if (fz > 0.0) {
    v = {{{bi, bj}, {bi, bj + 1}, {bi + 1, bj}}};
    w = {fz, f.y(), f.x()};
  } else {
    v = {{{bi + 1, bj + 1}, {bi + 1, bj}, {bi, bj + 1}}};
    w = {-fz, 1.0 - f.y(), 1.0 - f.x()};
  }

  PatchLookups out;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d vertex =
        params.grid_scale * Eigen::Vector2d(double(v[k][0]) + 0.5 * double(v[k][1]),
                                            double(v[k][1]) * std::numbers::sqrt3 / 2.0);
    out[k] = {vertex_offset(v[k][0], v[k][1], params.seed) + (u_star - vertex), w[k]};
  }
  return out;
}

PatchLookups hex_grid_lookup(const Eigen::Vector2d& u_star, const SynthesisParams& params) {
  // Distinct seed stream so hex and triangle modes pick different patches.
  SynthesisParams hex = params;
  hex.seed = mix64(params.seed ^ 0x6865785F74696C65ull);
  PatchLookups out = triangle_grid_lookup(u_star, hex);
  double total = 0.0;
  for (auto& l : out) {
    l.weight = std::pow(l.weight, params.hex_exponent);
    total += l.weight;
  }
  for (auto& l : out) l.weight /= total;
  return out;
}

Eigen::VectorXf blend_gaussian(const GaussianizedExemplar& gex, const PatchLookups& lookups) {
  const auto& plane = gex.gauss_plane;
  Eigen::VectorXf acc = Eigen::VectorXf::Zero(plane.channels());
  Eigen::VectorXf tmp(plane.channels());
  double sum_sq = 0.0;
  for (const auto& l : lookups) {
    if (l.weight == 0.0) continue;
    plane.fetch_into(l.offset.cast<float>(), tmp);
    acc += float(l.weight) * tmp;
    sum_sq += l.weight * l.weight;
  }
  return acc / float(std::sqrt(sum_sq));
}

Eigen::VectorXf blend_features(const GaussianizedExemplar& gex, const PatchLookups& lookups) {
  Eigen::VectorXf g = blend_gaussian(gex, lookups);
  for (Index c = 0; c < g.size(); ++c) g(c) = gex.luts[std::size_t(c)].from_normal(g(c));
  return g;
}

FeaturePlane<float> make_tileable(const FeaturePlane<float>& plane, Index border) {
  if (border < 0 || 2 * border >= std::min(plane.width(), plane.height())) {
    throw Error(ErrorKind::Argument, "make_tileable: border must be < min(width, height) / 2");
  }
  if (border == 0) return plane;
  const Index w = plane.width();
  const Index h = plane.height();
  auto band_weight = [border](Index i, Index n) {
    const double d = std::min(double(i) + 0.5, double(n - i) - 0.5);
    return d < double(border) ? float(1.0 - (d - 0.5) / double(border)) : 0.0f;
  };

  FeaturePlane<float> pass_u = plane;
  for (Index col = 0; col < w; ++col) {
    const float a = band_weight(col, w);
    if (a == 0.0f) continue;
    const Index shifted = (col + w / 2) % w;
    for (Index row = 0; row < h; ++row) {
      pass_u.texel(row, col) = plane.texel(row, col) + a * (plane.texel(row, shifted) - plane.texel(row, col));
    }
  }
  FeaturePlane<float> out = pass_u;
  for (Index row = 0; row < h; ++row) {
    const float a = band_weight(row, h);
    if (a == 0.0f) continue;
    const Index shifted = (row + h / 2) % h;
    for (Index col = 0; col < w; ++col) {
      out.texel(row, col) = pass_u.texel(row, col) + a * (pass_u.texel(shifted, col) - pass_u.texel(row, col));
    }
  }
  return out;
}

Index default_tileable_border(const FeaturePlane<float>& plane) {
  return std::min(plane.width(), plane.height()) / 25;
}

double wrap_seam_delta(const FeaturePlane<float>& plane) {
  const Index w = plane.width();
  const Index h = plane.height();
  double sum = 0.0;
  for (Index col = 0; col < w; ++col) sum += (plane.texel(0, col) - plane.texel(h - 1, col)).cwiseAbs().sum();
  for (Index row = 0; row < h; ++row) sum += (plane.texel(row, 0) - plane.texel(row, w - 1)).cwiseAbs().sum();
  return sum / double((w + h) * plane.channels());
}

std::uint64_t quilted_plane_bytes(const ModelShape& shape, double uv_scale) {
  const auto w = std::uint64_t(std::llround(uv_scale * double(shape.u_width)));
  const auto h = std::uint64_t(std::llround(uv_scale * double(shape.u_height)));
  return w * h * std::uint64_t(shape.u_channels) * 4ull;
}

StorageEstimate storage_estimate(const ModelShape& shape, SynthesisMode mode, double uv_scale) {
  if (!(uv_scale >= 1.0)) throw Error(ErrorKind::Argument, "storage_estimate: uv_scale must be >= 1");
  StorageEstimate e;
  e.directional_bytes = 2ull * 4ull * std::uint64_t(shape.dir_width * shape.dir_height * shape.dir_channels);
  e.positional_bytes = mode == SynthesisMode::Quilted
                           ? quilted_plane_bytes(shape, uv_scale)
                           : 4ull * std::uint64_t(shape.u_width * shape.u_height * shape.u_channels);
  const auto dims = shape.mlp_dims();
  std::uint64_t params = 0;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) params += std::uint64_t(dims[k + 1] * (dims[k] + 1));
  e.decoder_bytes = 4ull * params;
  return e;
}

Eigen::VectorXf synthesize_feature(const FeaturePlane<float>& plane_u, const GaussianizedExemplar* gex,
                                   const SynthesisParams& params, const Eigen::Vector2d& u_star) {
  switch (params.mode) {
    case SynthesisMode::Repeat: {
      const Eigen::Vector2d f = u_star.array() - u_star.array().floor();
      return plane_u.fetch(f.cast<float>());
    }
    case SynthesisMode::HistBlend:
      if (!gex) throw Error(ErrorKind::Configuration, "hist mode requires a Gaussianized exemplar");
      return blend_features(*gex, triangle_grid_lookup(u_star, params));
    case SynthesisMode::HexTile:
      if (!gex) throw Error(ErrorKind::Configuration, "hex mode requires a Gaussianized exemplar");
      return blend_features(*gex, hex_grid_lookup(u_star, params));
    case SynthesisMode::Quilted: {
      if (!params.quilted) throw Error(ErrorKind::Configuration, "quilted mode requires a quilted plane");
      const Eigen::Vector2d s = u_star / params.quilted->uv_scale;
      const Eigen::Vector2d f = s.array() - s.array().floor();
      return params.quilted->plane.fetch(f.cast<float>());
    }
  }
  throw Error(ErrorKind::Internal, "synthesize_feature: unknown mode");
}

}  // namespace btf
