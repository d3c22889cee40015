#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/error.hpp"
#include "btfsyn/hash.hpp"

namespace btf {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// Periodic value-noise fBm in [0, 1] at a texel center.
double fbm(double x, double y, int cells, int octaves, std::uint64_t seed) {
  double sum = 0.0;
  double norm = 0.0;
  double amp = 1.0;
  for (int o = 0; o < octaves; ++o) {
    const int n = cells << o;
    const double fx = x * n;
    const double fy = y * n;
    const auto ix = std::int64_t(std::floor(fx));
    const auto iy = std::int64_t(std::floor(fy));
    const double tx = smoothstep(fx - double(ix));
    const double ty = smoothstep(fy - double(iy));
    const std::uint64_t octave_seed = mix64(seed + std::uint64_t(o));
    auto lattice = [&](std::int64_t i, std::int64_t j) {
      const std::int64_t wi = ((i % n) + n) % n;
      const std::int64_t wj = ((j % n) + n) % n;
      return to_unit(lattice_hash(wi, wj, octave_seed));
    };
    const double v0 = lattice(ix, iy) + tx * (lattice(ix + 1, iy) - lattice(ix, iy));
    const double v1 = lattice(ix, iy + 1) + tx * (lattice(ix + 1, iy + 1) - lattice(ix, iy + 1));
    sum += amp * (v0 + ty * (v1 - v0));
    norm += amp;
    amp *= 0.5;
  }
  return sum / norm;
}

template <typename Fn>
void for_each_texel(const SyntheticBtfSpec& spec, Fn&& fn) {
  for (std::uint32_t row = 0; row < spec.height; ++row) {
    for (std::uint32_t col = 0; col < spec.width; ++col) {
      fn(row, col, (col + 0.5) / spec.width, (row + 0.5) / spec.height);
    }
  }
}

}  // namespace

void SyntheticBtfSpec::validate() const {
  if (width < 1 || height < 1 || n_theta < 1 || n_phi < 1 || noise_cells < 1 || noise_octaves < 1) {
    throw Error(ErrorKind::Argument, "SyntheticBtfSpec: counts must be >= 1");
  }
  if (!(roughness_min > 0.0 && roughness_min <= 1.0 && roughness_max > 0.0 && roughness_max <= 1.0 &&
        roughness_min <= roughness_max)) {
    throw Error(ErrorKind::Argument, "SyntheticBtfSpec: roughness must lie in (0, 1]");
  }
  if (!(theta_max_deg >= 0.0 && theta_max_deg < 90.0)) {
    throw Error(ErrorKind::Argument, "SyntheticBtfSpec: theta_max must lie in [0, 90)");
  }
  if (!(ior > 0.0) || !(specular_weight >= 0.0)) {
    throw Error(ErrorKind::Argument, "SyntheticBtfSpec: ior must be > 0 and specular weight >= 0");
  }
  if (!albedo_map.empty() && albedo_map.size() != std::size_t(width) * height * 3) {
    throw Error(ErrorKind::Argument, "SyntheticBtfSpec: albedo map size mismatch");
  }
}

std::vector<float> synthetic_albedo_map(const SyntheticBtfSpec& spec) {
  if (!spec.albedo_map.empty()) return spec.albedo_map;
  std::vector<float> out(std::size_t(spec.width) * spec.height * 3);
  for_each_texel(spec, [&](std::uint32_t row, std::uint32_t col, double x, double y) {
    const std::size_t t = (std::size_t(row) * spec.width + col) * 3;
    for (int c = 0; c < 3; ++c) {
      if (spec.albedo_constant) {
        out[t + c] = (*spec.albedo_constant)(c);
      } else {
        const double n = fbm(x, y, spec.noise_cells, spec.noise_octaves, spec.albedo_seed * 3 + c);
        out[t + c] = float(spec.albedo_min(c) + n * (spec.albedo_max(c) - spec.albedo_min(c)));
      }
    }
  });
  return out;
}

std::vector<float> synthetic_roughness_map(const SyntheticBtfSpec& spec) {
  std::vector<float> out(std::size_t(spec.width) * spec.height);
  for_each_texel(spec, [&](std::uint32_t row, std::uint32_t col, double x, double y) {
    const double n = fbm(x, y, spec.noise_cells, spec.noise_octaves, spec.roughness_seed);
    out[std::size_t(row) * spec.width + col] =
        float(spec.roughness_min + n * (spec.roughness_max - spec.roughness_min));
  });
  return out;
}

Eigen::Vector3f synthetic_reflectance(const Eigen::Vector3f& albedo, double roughness, double ior,
                                      double specular_weight, const Eigen::Vector3f& wi,
                                      const Eigen::Vector3f& wo) {
  constexpr double pi = std::numbers::pi;
  Eigen::Vector3d value = albedo.cast<double>() / pi;
  if (specular_weight > 0.0) {
    const Eigen::Vector3d i = wi.cast<double>();
    const Eigen::Vector3d o = wo.cast<double>();
    const Eigen::Vector3d h = (i + o).normalized();
    const double a2 = roughness * roughness;
    const double ch = h.z();
    const double denom = ch * ch * (a2 - 1.0) + 1.0;
    const double ndf = a2 / (pi * denom * denom);
    auto smith_g1 = [a2](double c) { return 2.0 * c / (c + std::sqrt(a2 + (1.0 - a2) * c * c)); };
    const double shadowing = smith_g1(i.z()) * smith_g1(o.z());
    const double f0 = std::pow((ior - 1.0) / (ior + 1.0), 2.0);
    const double fresnel = f0 + (1.0 - f0) * std::pow(1.0 - std::clamp(i.dot(h), 0.0, 1.0), 5.0);
    const double spec = specular_weight * fresnel * ndf * shadowing / (4.0 * i.z() * o.z());
    value.array() += spec;
  }
  return value.cast<float>();
}

BtfDataset generate_synthetic_btf(const SyntheticBtfSpec& spec) {
  spec.validate();
  const auto grid = direction_grid(spec.n_theta, spec.n_phi, spec.theta_max_deg);
  const auto albedo = synthetic_albedo_map(spec);
  const auto roughness = synthetic_roughness_map(spec);

  BtfDataset d;
  d.width = spec.width;
  d.height = spec.height;
  for (const auto& wi : grid) {
    for (const auto& wo : grid) d.pairs.push_back({wi, wo});
  }
  d.data.resize(d.pair_count() * d.texels() * 3);
  for (std::size_t p = 0; p < d.pair_count(); ++p) {
    auto img = d.slice(p);
    for (std::size_t t = 0; t < d.texels(); ++t) {
      const Eigen::Vector3f a(albedo[3 * t], albedo[3 * t + 1], albedo[3 * t + 2]);
      img.col(Index(t)) = synthetic_reflectance(a, roughness[t], spec.ior, spec.specular_weight,
                                                d.pairs[p].wi, d.pairs[p].wo);
    }
  }
  return d;
}

}  // namespace btf
