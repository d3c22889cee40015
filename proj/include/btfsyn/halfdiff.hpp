#pragma once

// Direction math in the shading frame (z up): Rusinkiewicz half/difference
// angles, their inverse, the mapping onto directional feature planes, and
// cosine-weighted hemisphere sampling.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "btfsyn/error.hpp"

namespace btf {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
struct DirectionPair {
  Vec3<Scalar> wi;
  Vec3<Scalar> wo;
};

/// theta in [0, pi/2], phi in [0, 2pi).
template <typename Scalar>
struct HalfDiffCoords {
  Scalar theta_h = 0;
  Scalar phi_h = 0;
  Scalar theta_d = 0;
  Scalar phi_d = 0;
};

/// Texture coordinates into the H and D planes. x is theta (clamped axis),
/// y is phi (wrapped axis).
template <typename Scalar>
struct PlaneCoords {
  Vec2<Scalar> uv_h;
  Vec2<Scalar> uv_d;
};

template <typename Scalar>
struct HemisphereSample {
  Vec3<Scalar> direction;
  Scalar pdf;
};

namespace detail {

template <typename Scalar>
Scalar wrap_angle(Scalar phi) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  if (phi < Scalar(0)) phi += two_pi;
  if (phi >= two_pi) phi -= two_pi;
  // x + 2pi can round up to exactly 2pi for tiny negative x.
  if (phi >= two_pi) phi = Scalar(0);
  return phi;
}

template <typename Scalar>
Vec3<Scalar> spherical_direction(Scalar theta, Scalar phi) {
  using std::cos;
  using std::sin;
  const Scalar st = sin(theta);
  return {st * cos(phi), st * sin(phi), cos(theta)};
}

template <typename Scalar>
Scalar polar_angle(const Vec3<Scalar>& v) {
  using std::acos;
  return acos(std::clamp(v.z(), Scalar(-1), Scalar(1)));
}

template <typename Scalar>
Scalar azimuth(const Vec3<Scalar>& v) {
  using std::atan2;
  return wrap_angle(atan2(v.y(), v.x()));
}

}  // namespace detail

/// Below this polar angle the half vector azimuth is pinned to 0.
inline constexpr double kPoleThreshold = 1e-7;

template <typename Scalar>
HalfDiffCoords<Scalar> to_half_diff(const DirectionPair<Scalar>& pair) {
  const Vec3<Scalar> sum = pair.wi + pair.wo;
  const Scalar norm = sum.norm();
  if (!(norm > Scalar(1e-6))) {
    throw Error(ErrorKind::DegeneratePair, "to_half_diff: |wi + wo| <= 1e-6");
  }
  const Vec3<Scalar> h = sum / norm;

  HalfDiffCoords<Scalar> hd;
  hd.theta_h = detail::polar_angle(h);
  hd.phi_h = hd.theta_h < Scalar(kPoleThreshold) ? Scalar(0) : detail::azimuth(h);

  const Eigen::AngleAxis<Scalar> unspin(-hd.phi_h, Vec3<Scalar>::UnitZ());
  const Eigen::AngleAxis<Scalar> untilt(-hd.theta_h, Vec3<Scalar>::UnitY());
  const Vec3<Scalar> d = untilt * (unspin * pair.wi);
  hd.theta_d = detail::polar_angle(d);
  hd.phi_d = detail::azimuth(d);
  return hd;
}

template <typename Scalar>
DirectionPair<Scalar> from_half_diff(const HalfDiffCoords<Scalar>& hd) {
  const Vec3<Scalar> h = detail::spherical_direction(hd.theta_h, hd.phi_h);
  const Vec3<Scalar> d = detail::spherical_direction(hd.theta_d, hd.phi_d);
  const Eigen::AngleAxis<Scalar> spin(hd.phi_h, Vec3<Scalar>::UnitZ());
  const Eigen::AngleAxis<Scalar> tilt(hd.theta_h, Vec3<Scalar>::UnitY());

  DirectionPair<Scalar> pair;
  pair.wi = spin * (tilt * d);
  pair.wo = Scalar(2) * pair.wi.dot(h) * h - pair.wi;
  if (!(pair.wi.z() > Scalar(0)) || !(pair.wo.z() > Scalar(0))) {
    throw Error(ErrorKind::OutOfHemisphere,
                "from_half_diff: reconstructed direction below the horizon");
  }
  return pair;
}

template <typename Scalar>
PlaneCoords<Scalar> halfdiff_to_plane_uv(const HalfDiffCoords<Scalar>& hd) {
  constexpr Scalar half_pi = std::numbers::pi_v<Scalar> / Scalar(2);
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  return {Vec2<Scalar>(hd.theta_h / half_pi, hd.phi_h / two_pi),
          Vec2<Scalar>(hd.theta_d / half_pi, hd.phi_d / two_pi)};
}

/// Cosine-weighted direction about +z; pdf is per steradian.
template <typename Scalar>
HemisphereSample<Scalar> cosine_sample_hemisphere(Scalar u1, Scalar u2) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar r = sqrt(u1);
  const Scalar phi = Scalar(2) * std::numbers::pi_v<Scalar> * u2;
  const Scalar z = sqrt(std::max(Scalar(0), Scalar(1) - u1));
  return {Vec3<Scalar>(r * cos(phi), r * sin(phi), z), z / std::numbers::pi_v<Scalar>};
}

}  // namespace btf
