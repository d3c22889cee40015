#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "btfsyn/error.hpp"
#include "btfsyn/halfdiff.hpp"
#include "btfsyn/parallel.hpp"
#include "btfsyn/render.hpp"

namespace btf {

void RenderSpec::validate() const {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Argument, "RenderSpec: image size must be positive");
  if (!(uv_scale >= 1.0)) throw Error(ErrorKind::Argument, "RenderSpec: uv_scale must be >= 1");
  const Eigen::Vector3d& power = light.kind == Light::Kind::Directional ? light.radiance : light.intensity;
  if (!power.allFinite() || (power.array() < 0.0).any()) {
    throw Error(ErrorKind::Argument, "RenderSpec: light radiance must be finite and non-negative");
  }
  if (light.kind == Light::Kind::Directional && !(light.direction.norm() > 0.0)) {
    throw Error(ErrorKind::Argument, "RenderSpec: light direction must be non-zero");
  }
  if (camera.kind == Camera::Kind::Perspective) {
    if (!(camera.eye.z() > 0.0)) throw Error(ErrorKind::Argument, "RenderSpec: camera must be above the surface");
    if (!(camera.fov_deg > 0.0 && camera.fov_deg < 180.0)) {
      throw Error(ErrorKind::Argument, "RenderSpec: field of view must lie in (0, 180)");
    }
    if (!((camera.target - camera.eye).norm() > 0.0)) {
      throw Error(ErrorKind::Argument, "RenderSpec: camera target equals eye");
    }
  }
  if (!(exposure >= 0.0) || !(gamma > 0.0)) throw Error(ErrorKind::Argument, "RenderSpec: bad exposure or gamma");
}

ImageBuffer render(const RenderSpec& spec, const ReflectanceFn& reflectance) {
  spec.validate();
  ImageBuffer img(spec.width, spec.height);

  const Eigen::Vector3d forward = (spec.camera.target - spec.camera.eye).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Eigen::Vector3d::UnitY());
  right.normalize();
  const Eigen::Vector3d up = right.cross(forward);
  const double tan_half = std::tan(0.5 * spec.camera.fov_deg * std::numbers::pi / 180.0);
  const double aspect = double(spec.width) / double(spec.height);

  parallel_for(std::size_t(spec.height), resolve_threads(spec.threads), [&](std::size_t row) {
    const int y = int(row);
    for (int x = 0; x < spec.width; ++x) {
      const double sx = (x + 0.5) / spec.width;
      const double sy = (y + 0.5) / spec.height;
      Eigen::Vector3d point;
      Eigen::Vector3d wo;
      if (spec.camera.kind == Camera::Kind::Orthographic) {
        point = {sx, sy, 0.0};
        wo = Eigen::Vector3d::UnitZ();
      } else {
        const Eigen::Vector3d dir =
            (forward + (2.0 * sx - 1.0) * tan_half * aspect * right + (1.0 - 2.0 * sy) * tan_half * up).normalized();
        if (!(dir.z() < 0.0)) continue;
        point = spec.camera.eye - (spec.camera.eye.z() / dir.z()) * dir;
        wo = -dir;
      }

      Eigen::Vector3d wi;
      Eigen::Vector3d incident;
      if (spec.light.kind == Light::Kind::Directional) {
        wi = spec.light.direction.normalized();
        incident = spec.light.radiance;
      } else {
        const Eigen::Vector3d to_light = spec.light.position - point;
        const double d2 = to_light.squaredNorm();
        if (!(d2 > 0.0)) continue;
        wi = to_light / std::sqrt(d2);
        incident = spec.light.intensity / d2;
      }
      if (!(wi.z() > 0.0) || !(wo.z() > 0.0)) continue;

      const Eigen::Vector2d u_star = point.head<2>() * spec.uv_scale;
      const Eigen::Vector3f f = reflectance(u_star, wi.cast<float>(), wo.cast<float>());
      img.at(x, y) = (f.cast<double>().cwiseProduct(incident) * wi.z()).cast<float>();
    }
  });
  return img;
}

ImageBuffer render_plane(const Evaluator& evaluator, const RenderSpec& spec) {
  return render(spec, [&](const Eigen::Vector2d& u, const Eigen::Vector3f& wi, const Eigen::Vector3f& wo) {
    return evaluator.query({u, wi, wo});
  });
}

ImageBuffer render_reference(const BtfDataset& dataset, const RenderSpec& spec) {
  const DatasetInterpolator interp(dataset);
  return render(spec, [&](const Eigen::Vector2d& u, const Eigen::Vector3f& wi, const Eigen::Vector3f& wo) {
    return interp(u, wi, wo);
  });
}

std::vector<BtfQuery> random_queries(std::size_t n, std::uint64_t seed, double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<BtfQuery> out(n);
  for (auto& q : out) {
    q.u_star = {extent * unit(rng), extent * unit(rng)};
    const double a = unit(rng), b = unit(rng), c = unit(rng), d = unit(rng);
    q.wi = cosine_sample_hemisphere(a, b).direction.cast<float>();
    q.wo = cosine_sample_hemisphere(c, d).direction.cast<float>();
  }
  return out;
}

BenchReport bench(const Evaluator& evaluator, std::size_t n, int threads, std::uint64_t seed, int repetitions) {
  if (n == 0) throw Error(ErrorKind::Argument, "bench: n must be >= 1");
  const auto queries = random_queries(4 * n, seed);
  std::vector<Eigen::Vector3f> out(queries.size());
  std::vector<QueryStatus> status(queries.size());

  auto time_batch = [&](std::size_t count) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, repetitions); ++r) {
      const auto start = std::chrono::steady_clock::now();
      evaluator.query_batch(std::span(queries).first(count), std::span(out).first(count),
                            std::span(status).first(count), threads);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      best = std::min(best, dt.count());
    }
    return best;
  };

  BenchReport report;
  report.n = n;
  report.threads = resolve_threads(threads);
  report.seconds_n = time_batch(n);
  report.seconds_4n = time_batch(4 * n);
  return report;
}

}  // namespace btf
